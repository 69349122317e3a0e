#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stiffgp/types.hpp"

namespace stiffgp::ode {

using RhsFn = std::function<Vector(const Vector& x, double t, const Vector& p)>;
using JacFn = std::function<Matrix(const Vector& x, double t, const Vector& p)>;
using InitFn = std::function<Vector(const Vector& p)>;

/// Parameterized initial value problem x' = f(x, t, p), x(t0) = x0(p).
struct OdeProblem {
    RhsFn rhs;
    JacFn jac;  // optional; finite differences when empty
    InitFn x0;
    double t0 = 0.0;
    double tf = 1.0;
    int n_x = 0;
    int n_p = 0;
    Box param_box;
    int component = 0;  // solution component under study, 0-based
    bool autonomous = true;

    void validate() const;
    bool in_box(const Vector& p) const;
};

struct IntegrateOptions {
    double rtol = 1e-9;
    double atol = 1e-9;
    std::size_t max_steps = 1000000;
};

/// Continuous-in-time trajectory with C1 Hermite interpolation between
/// accepted steps. Immutable after construction; concurrent reads are safe.
class DenseSolution {
  public:
    DenseSolution(Vector parameter, std::vector<double> mesh, std::vector<Vector> states,
                  std::vector<Vector> derivatives);

    const Vector& parameter() const { return parameter_; }
    const std::vector<double>& mesh() const { return mesh_; }
    const std::vector<Vector>& states() const { return states_; }
    const std::vector<Vector>& derivatives() const { return derivs_; }
    double t0() const { return mesh_.front(); }
    double tf() const { return mesh_.back(); }
    int dim() const { return static_cast<int>(states_.front().size()); }

    Vector eval(double t) const;
    Vector deriv(double t) const;
    double eval_component(double t, int component) const;
    double deriv_component(double t, int component) const;

  private:
    int locate(double t) const;

    Vector parameter_;
    std::vector<double> mesh_;
    std::vector<Vector> states_;
    std::vector<Vector> derivs_;
};

/// Adaptive semi-implicit Rosenbrock 3(2) integration with embedded error
/// estimate; handles very stiff regimes.
DenseSolution integrate(const OdeProblem& problem, const Vector& p,
                        const IntegrateOptions& options = {});

/// Derivative of the studied component at (x, t, p).
double rhs_component(const OdeProblem& problem, const Vector& x, double t, const Vector& p);

struct ProblemCatalogEntry {
    std::string name;
    OdeProblem problem;
    Interval default_horizon;
    Vector default_x0;
    Vector default_params;
    std::string notes;
};

/// Benchmark catalog: vdpo, tdo, brusselator, harmonic.
const ProblemCatalogEntry& catalog(const std::string& name);
std::vector<std::string> catalog_names();

}  // namespace stiffgp::ode
