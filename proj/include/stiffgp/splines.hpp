#pragma once

#include <vector>

#include "stiffgp/ode.hpp"
#include "stiffgp/types.hpp"

namespace stiffgp::splines {

enum class SplineOrder { cubic, quintic };

/// Piecewise Hermite polynomial: C1 for cubic segments, C2 for quintic ones.
/// Values are immutable after construction; concurrent evaluation is safe.
class HermiteSpline {
  public:
    HermiteSpline(SplineOrder order, std::vector<double> knots, std::vector<double> values,
                  std::vector<double> d1, std::vector<double> d2 = {});

    double eval(double s) const;
    /// k-th derivative, k <= 1 for cubic and k <= 2 for quintic splines.
    double eval_deriv(double s, int k = 1) const;

    SplineOrder order() const { return order_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& first_derivatives() const { return d1_; }
    const std::vector<double>& second_derivatives() const { return d2_; }
    double domain_lo() const { return knots_.front(); }
    double domain_hi() const { return knots_.back(); }

  private:
    int locate(double s) const;

    SplineOrder order_;
    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> d1_;
    std::vector<double> d2_;
};

/// Interpolates strictly increasing values with zero first derivative at every
/// knot (quintic: zero second derivative as well). The result is strictly
/// monotonically increasing.
HermiteSpline build_zero_slope_spline(const std::vector<double>& knots,
                                      const std::vector<double>& values, SplineOrder order);

/// C2 monotone interpolation of non-decreasing data. Finite-difference
/// derivative estimates are shrunk toward zero where they violate the
/// per-segment monotonicity region of the quintic.
HermiteSpline monotone_quintic_interpolate(const std::vector<double>& abscissae,
                                           const std::vector<double>& ordinates);

enum class ExtremumKind { maximum, minimum };

struct ExtremePointSet {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<ExtremumKind> kinds;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

/// Locates interior extrema of a solution component: discrete sign-change scan
/// on the integrator mesh, refined by bisection on the dense-output
/// derivative until the bracket is below tol.
ExtremePointSet find_extrema(const ode::DenseSolution& sol, int component, double tol);

}  // namespace stiffgp::splines
