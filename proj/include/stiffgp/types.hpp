#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace stiffgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    bool degenerate() const { return lo == hi; }
};

using Box = std::vector<Interval>;

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IntegrationDivergedError : public Error {
  public:
    using Error::Error;
};

class StiffnessFailureError : public Error {
  public:
    StiffnessFailureError(const std::string& msg, Vector parameter)
        : Error(msg), parameter(std::move(parameter)) {}
    Vector parameter;
};

class CatalogMissError : public Error {
  public:
    using Error::Error;
};

class MonotonicityImpossibleError : public Error {
  public:
    using Error::Error;
};

class NotMonotoneDataError : public Error {
  public:
    using Error::Error;
};

class DegenerateKnotError : public Error {
  public:
    using Error::Error;
};

class InvalidSpecError : public Error {
  public:
    using Error::Error;
};

class IllConditionedKernelError : public Error {
  public:
    IllConditionedKernelError(const std::string& msg, double condition_estimate)
        : Error(msg), condition_estimate(condition_estimate) {}
    double condition_estimate;
};

class UndefinedMmrError : public Error {
  public:
    using Error::Error;
};

class UndefinedErrorNormError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace stiffgp
