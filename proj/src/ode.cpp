#include "stiffgp/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stiffgp::ode {

namespace {

bool finite(const Vector& v) { return v.allFinite(); }

std::string format_parameter(const Vector& p) {
    std::ostringstream os;
    os << "[";
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (i) os << ", ";
        os << p[i];
    }
    os << "]";
    return os.str();
}

Matrix fd_jacobian(const RhsFn& rhs, const Vector& x, double t, const Vector& p,
                   const Vector& f0) {
    const int n = static_cast<int>(x.size());
    Matrix jac(n, n);
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    Vector xp = x;
    for (int j = 0; j < n; ++j) {
        const double dj = sqrt_eps * std::max(std::abs(x[j]), 1e-5);
        xp[j] = x[j] + dj;
        jac.col(j) = (rhs(xp, t, p) - f0) / dj;
        xp[j] = x[j];
    }
    return jac;
}

// Rosenbrock 3(2), 4 stages, L-stable and stiffly accurate.
struct Rodas3 {
    static constexpr int stages = 4;
    static constexpr double gamma = 0.5;
    // a[i][j]: stage state coefficients, c[i][j]: solve right-hand-side
    // coefficients (scaled by 1/h), applied for j < i.
    static constexpr double a[4][4] = {{0, 0, 0, 0},
                                       {0, 0, 0, 0},
                                       {2, 0, 0, 0},
                                       {2, 0, 1, 0}};
    static constexpr double c[4][4] = {{0, 0, 0, 0},
                                       {4, 0, 0, 0},
                                       {1, -1, 0, 0},
                                       {1, -1, -8.0 / 3.0, 0}};
    static constexpr double m[4] = {2, 0, 1, 1};
    static constexpr double e[4] = {0, 0, 0, 1};
    static constexpr double alpha[4] = {0, 0, 1, 1};
    static constexpr double gamma_stage[4] = {0.5, 1.5, 0, 0};
    // Stage 2 reuses the stage-1 function value (a21 = 0).
    static constexpr bool fresh_rhs[4] = {true, false, true, true};
    static constexpr double error_order = 3.0;
};

double scaled_norm(const Vector& v, const Vector& scale) {
    const double n = static_cast<double>(v.size());
    return std::sqrt((v.array() / scale.array()).square().sum() / n);
}

double initial_step(const RhsFn& rhs, const Vector& y0, const Vector& f0, double t0, double span,
                    const Vector& p, double rtol, double atol) {
    Vector sc = (atol + rtol * y0.array().abs()).matrix();
    const double d0 = scaled_norm(y0, sc);
    const double d1 = scaled_norm(f0, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    Vector y1 = y0 + h0 * f0;
    Vector f1 = rhs(y1, t0 + h0, p);
    if (!finite(f1)) return std::min(1e-8 * span, h0);
    const double d2 = scaled_norm(f1 - f0, sc) / h0;
    double h1;
    if (std::max(d1, d2) <= 1e-15) {
        h1 = std::max(1e-6, h0 * 1e-3);
    } else {
        h1 = std::cbrt(0.01 / std::max(d1, d2));
    }
    return std::min({100.0 * h0, h1, span});
}

}  // namespace

void OdeProblem::validate() const {
    if (!rhs) throw InvalidSpecError("OdeProblem: missing rhs");
    if (!x0) throw InvalidSpecError("OdeProblem: missing x0");
    if (!(t0 < tf)) throw InvalidSpecError("OdeProblem: requires t0 < tf");
    if (n_x < 1) throw InvalidSpecError("OdeProblem: state dimension must be positive");
    if (static_cast<int>(param_box.size()) != n_p)
        throw InvalidSpecError("OdeProblem: param_box size must equal n_p");
    for (const auto& iv : param_box)
        if (!(iv.lo <= iv.hi)) throw InvalidSpecError("OdeProblem: empty parameter interval");
    if (component < 0 || component >= n_x)
        throw InvalidSpecError("OdeProblem: component out of range");
}

bool OdeProblem::in_box(const Vector& p) const {
    if (static_cast<int>(p.size()) != n_p) return false;
    for (int i = 0; i < n_p; ++i)
        if (!param_box[i].contains(p[i])) return false;
    return true;
}

DenseSolution::DenseSolution(Vector parameter, std::vector<double> mesh,
                             std::vector<Vector> states, std::vector<Vector> derivatives)
    : parameter_(std::move(parameter)),
      mesh_(std::move(mesh)),
      states_(std::move(states)),
      derivs_(std::move(derivatives)) {
    if (mesh_.size() < 2 || mesh_.size() != states_.size() || mesh_.size() != derivs_.size())
        throw InvalidSpecError("DenseSolution: inconsistent mesh/state/derivative sizes");
    for (std::size_t j = 1; j < mesh_.size(); ++j)
        if (!(mesh_[j] > mesh_[j - 1]))
            throw InvalidSpecError("DenseSolution: mesh must be strictly increasing");
}

int DenseSolution::locate(double t) const {
    const double span = tf() - t0();
    const double slack = 1e-10 * span;
    if (t < t0() - slack || t > tf() + slack)
        throw std::domain_error("DenseSolution: time outside [t0, tf]");
    auto it = std::upper_bound(mesh_.begin(), mesh_.end(), t);
    int idx = static_cast<int>(it - mesh_.begin()) - 1;
    return std::clamp(idx, 0, static_cast<int>(mesh_.size()) - 2);
}

Vector DenseSolution::eval(double t) const {
    const int j = locate(t);
    const double h = mesh_[j + 1] - mesh_[j];
    const double u = std::clamp((t - mesh_[j]) / h, 0.0, 1.0);
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return h00 * states_[j] + (h10 * h) * derivs_[j] + h01 * states_[j + 1] +
           (h11 * h) * derivs_[j + 1];
}

Vector DenseSolution::deriv(double t) const {
    const int j = locate(t);
    const double h = mesh_[j + 1] - mesh_[j];
    const double u = std::clamp((t - mesh_[j]) / h, 0.0, 1.0);
    const double u2 = u * u;
    const double d00 = (6 * u2 - 6 * u) / h;
    const double d10 = 3 * u2 - 4 * u + 1;
    const double d01 = (-6 * u2 + 6 * u) / h;
    const double d11 = 3 * u2 - 2 * u;
    return d00 * states_[j] + d10 * derivs_[j] + d01 * states_[j + 1] + d11 * derivs_[j + 1];
}

double DenseSolution::eval_component(double t, int component) const {
    const int j = locate(t);
    const double h = mesh_[j + 1] - mesh_[j];
    const double u = std::clamp((t - mesh_[j]) / h, 0.0, 1.0);
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * states_[j][component] +
           (u3 - 2 * u2 + u) * h * derivs_[j][component] +
           (-2 * u3 + 3 * u2) * states_[j + 1][component] +
           (u3 - u2) * h * derivs_[j + 1][component];
}

double DenseSolution::deriv_component(double t, int component) const {
    const int j = locate(t);
    const double h = mesh_[j + 1] - mesh_[j];
    const double u = std::clamp((t - mesh_[j]) / h, 0.0, 1.0);
    const double u2 = u * u;
    return (6 * u2 - 6 * u) / h * states_[j][component] +
           (3 * u2 - 4 * u + 1) * derivs_[j][component] +
           (-6 * u2 + 6 * u) / h * states_[j + 1][component] +
           (3 * u2 - 2 * u) * derivs_[j + 1][component];
}

DenseSolution integrate(const OdeProblem& problem, const Vector& p,
                        const IntegrateOptions& options) {
    problem.validate();
    if (!problem.in_box(p))
        throw InvalidSpecError("integrate: parameter outside param_box " + format_parameter(p));
    if (!(options.rtol > 0) || !(options.atol > 0))
        throw InvalidSpecError("integrate: tolerances must be positive");

    using Method = Rodas3;
    const double t_end = problem.tf;
    const double span = t_end - problem.t0;
    const double eps = std::numeric_limits<double>::epsilon();

    double t = problem.t0;
    Vector y = problem.x0(p);
    if (static_cast<int>(y.size()) != problem.n_x)
        throw InvalidSpecError("integrate: x0 dimension mismatch");
    Vector f = problem.rhs(y, t, p);
    if (!finite(y) || !finite(f))
        throw IntegrationDivergedError("integrate: non-finite initial data");

    std::vector<double> mesh{t};
    std::vector<Vector> states{y};
    std::vector<Vector> derivs{f};

    double h = initial_step(problem.rhs, y, f, t, span, p, options.rtol, options.atol);
    std::size_t accepted = 0;
    std::size_t rejected_in_a_row = 0;

    const int n = problem.n_x;
    Matrix kmat(n, Method::stages);
    Vector dfdt = Vector::Zero(n);

    while (t < t_end) {
        if (accepted >= options.max_steps)
            throw StiffnessFailureError(
                "integrate: accepted step budget exceeded at p = " + format_parameter(p), p);
        const double h_min = 16.0 * eps * std::max(std::abs(t), 1.0);
        if (h < h_min)
            throw IntegrationDivergedError("integrate: step size underflow at t = " +
                                           std::to_string(t));
        h = std::min(h, t_end - t);

        Matrix jac = problem.jac ? problem.jac(y, t, p) : fd_jacobian(problem.rhs, y, t, p, f);
        if (!problem.autonomous) {
            const double dt = std::sqrt(eps) * std::max(std::abs(t), 1e-5);
            dfdt = (problem.rhs(y, t + dt, p) - f) / dt;
        }

        bool step_ok = false;
        Vector y_new, f_new;
        while (!step_ok) {
            Matrix w = Matrix::Identity(n, n) / (h * Method::gamma) - jac;
            Eigen::PartialPivLU<Matrix> lu(w);

            bool stage_finite = true;
            Vector f_stage;
            for (int i = 0; i < Method::stages; ++i) {
                if (Method::fresh_rhs[i]) {
                    Vector y_stage = y;
                    for (int j = 0; j < i; ++j)
                        if (Method::a[i][j] != 0.0) y_stage += Method::a[i][j] * kmat.col(j);
                    f_stage = problem.rhs(y_stage, t + Method::alpha[i] * h, p);
                }
                Vector rhs_i = f_stage;
                for (int j = 0; j < i; ++j)
                    if (Method::c[i][j] != 0.0) rhs_i += (Method::c[i][j] / h) * kmat.col(j);
                if (!problem.autonomous && Method::gamma_stage[i] != 0.0)
                    rhs_i += (h * Method::gamma_stage[i]) * dfdt;
                kmat.col(i) = lu.solve(rhs_i);
                if (!finite(kmat.col(i))) {
                    stage_finite = false;
                    break;
                }
            }

            if (stage_finite) {
                y_new = y;
                Vector err = Vector::Zero(n);
                for (int i = 0; i < Method::stages; ++i) {
                    if (Method::m[i] != 0.0) y_new += Method::m[i] * kmat.col(i);
                    if (Method::e[i] != 0.0) err += Method::e[i] * kmat.col(i);
                }
                if (finite(y_new)) {
                    Vector sc = (options.atol +
                                 options.rtol * y.array().abs().max(y_new.array().abs()))
                                    .matrix();
                    const double err_norm = scaled_norm(err, sc);
                    if (err_norm <= 1.0) {
                        f_new = problem.rhs(y_new, t + h, p);
                        if (finite(f_new)) {
                            step_ok = true;
                            const double fac =
                                0.9 * std::pow(std::max(err_norm, 1e-10),
                                               -1.0 / Method::error_order);
                            double grow = std::clamp(fac, 0.2, 6.0);
                            if (rejected_in_a_row > 0) grow = std::min(grow, 1.0);
                            t += h;
                            if (t_end - t < h_min) t = t_end;
                            y = y_new;
                            f = f_new;
                            mesh.push_back(t);
                            states.push_back(y);
                            derivs.push_back(f);
                            ++accepted;
                            rejected_in_a_row = 0;
                            h *= grow;
                            continue;
                        }
                    } else {
                        ++rejected_in_a_row;
                        const double fac =
                            0.9 * std::pow(err_norm, -1.0 / Method::error_order);
                        h *= std::clamp(fac, 0.1, 0.9);
                        if (h < h_min)
                            throw IntegrationDivergedError(
                                "integrate: step size underflow during rejection at t = " +
                                std::to_string(t));
                        continue;
                    }
                }
            }
            // Non-finite stage or state: retry with a much smaller step.
            ++rejected_in_a_row;
            h *= 0.1;
            if (h < h_min)
                throw IntegrationDivergedError(
                    "integrate: non-finite state encountered at t = " + std::to_string(t) +
                    ", p = " + format_parameter(p));
        }
    }

    return DenseSolution(p, std::move(mesh), std::move(states), std::move(derivs));
}

double rhs_component(const OdeProblem& problem, const Vector& x, double t, const Vector& p) {
    if (!finite(x) || !std::isfinite(t) || !finite(p))
        throw std::invalid_argument("rhs_component: non-finite input");
    Vector f = problem.rhs(x, t, p);
    return f[problem.component];
}

namespace {

ProblemCatalogEntry make_vdpo() {
    ProblemCatalogEntry entry;
    entry.name = "vdpo";
    OdeProblem& pr = entry.problem;
    pr.rhs = [](const Vector& x, double, const Vector& p) {
        Vector f(2);
        f[0] = x[1];
        f[1] = p[0] * (1.0 - x[0] * x[0]) * x[1] - x[0];
        return f;
    };
    pr.jac = [](const Vector& x, double, const Vector& p) {
        Matrix j(2, 2);
        j(0, 0) = 0.0;
        j(0, 1) = 1.0;
        j(1, 0) = -2.0 * p[0] * x[0] * x[1] - 1.0;
        j(1, 1) = p[0] * (1.0 - x[0] * x[0]);
        return j;
    };
    pr.x0 = [](const Vector&) { return Vector{{2.0, 0.0}}; };
    pr.t0 = 0.0;
    pr.tf = 20.0;
    pr.n_x = 2;
    pr.n_p = 1;
    pr.param_box = {{1.0, 10.0}};
    pr.component = 0;
    entry.default_horizon = {0.0, 20.0};
    entry.default_x0 = Vector{{2.0, 0.0}};
    entry.default_params = Vector{{10.0}};
    entry.notes =
        "second-order oscillator in first-order form; x(0) = [2, 0] from the standard "
        "benchmark statement; horizon and parameter range are project defaults";
    return entry;
}

ProblemCatalogEntry make_tdo() {
    ProblemCatalogEntry entry;
    entry.name = "tdo";
    OdeProblem& pr = entry.problem;
    auto g = [](double x1) { return 10.8 * x1 * x1 - 8.766 * x1 + 1.8; };
    pr.rhs = [g](const Vector& x, double, const Vector& p) {
        Vector f(2);
        f[0] = (x[1] - g(x[0]) * x[0]) / p[0];
        f[1] = (0.25 - x[0] - x[1]) / p[1];
        return f;
    };
    pr.jac = [](const Vector& x, double, const Vector& p) {
        Matrix j(2, 2);
        j(0, 0) = -(32.4 * x[0] * x[0] - 17.532 * x[0] + 1.8) / p[0];
        j(0, 1) = 1.0 / p[0];
        j(1, 0) = -1.0 / p[1];
        j(1, 1) = -1.0 / p[1];
        return j;
    };
    pr.x0 = [](const Vector&) { return Vector{{0.0, 0.0}}; };
    pr.t0 = 0.0;
    pr.tf = 0.015;
    pr.n_x = 2;
    pr.n_p = 2;
    pr.param_box = {{1e-6, 1e-5}, {2.9e-3, 3.1e-3}};
    pr.component = 0;
    entry.default_horizon = {0.0, 0.015};
    entry.default_x0 = Vector{{0.0, 0.0}};
    entry.default_params = Vector{{1e-6, 3e-3}};
    entry.notes =
        "tunnel diode oscillator; dynamics and p2 range from the standard statement; x0, "
        "horizon and the p1 range are project defaults";
    return entry;
}

ProblemCatalogEntry make_brusselator() {
    ProblemCatalogEntry entry;
    entry.name = "brusselator";
    OdeProblem& pr = entry.problem;
    pr.rhs = [](const Vector& x, double, const Vector& p) {
        Vector f(2);
        f[0] = p[0] - (p[1] + p[3]) * x[0] + p[2] * x[0] * x[0] * x[1];
        f[1] = p[1] * x[0] - p[2] * x[0] * x[0] * x[1];
        return f;
    };
    pr.jac = [](const Vector& x, double, const Vector& p) {
        Matrix j(2, 2);
        j(0, 0) = -(p[1] + p[3]) + 2.0 * p[2] * x[0] * x[1];
        j(0, 1) = p[2] * x[0] * x[0];
        j(1, 0) = p[1] - 2.0 * p[2] * x[0] * x[1];
        j(1, 1) = -p[2] * x[0] * x[0];
        return j;
    };
    pr.x0 = [](const Vector&) { return Vector{{1.5, 3.0}}; };
    pr.t0 = 0.0;
    pr.tf = 20.0;
    pr.n_x = 2;
    pr.n_p = 4;
    pr.param_box = {{0.99, 1.01}, {2.97, 3.03}, {0.99, 1.01}, {0.99, 1.01}};
    pr.component = 0;
    entry.default_horizon = {0.0, 20.0};
    entry.default_x0 = Vector{{1.5, 3.0}};
    entry.default_params = Vector{{1.0, 3.0, 1.0, 1.0}};
    entry.notes =
        "chemical kinetics benchmark; parameter boxes from the standard statement; x0 and "
        "horizon are project defaults";
    return entry;
}

ProblemCatalogEntry make_harmonic() {
    ProblemCatalogEntry entry;
    entry.name = "harmonic";
    OdeProblem& pr = entry.problem;
    pr.rhs = [](const Vector& x, double, const Vector& p) {
        Vector f(2);
        f[0] = x[1];
        f[1] = -p[0] * p[0] * x[0];
        return f;
    };
    pr.jac = [](const Vector&, double, const Vector& p) {
        Matrix j(2, 2);
        j(0, 0) = 0.0;
        j(0, 1) = 1.0;
        j(1, 0) = -p[0] * p[0];
        j(1, 1) = 0.0;
        return j;
    };
    pr.x0 = [](const Vector&) { return Vector{{1.0, 0.0}}; };
    pr.t0 = 0.0;
    pr.tf = 20.0 * M_PI;
    pr.n_x = 2;
    pr.n_p = 1;
    pr.param_box = {{0.8, 1.25}};
    pr.component = 0;
    entry.default_horizon = {0.0, 20.0 * M_PI};
    entry.default_x0 = Vector{{1.0, 0.0}};
    entry.default_params = Vector{{1.0}};
    entry.notes = "non-stiff self-test entry with analytic solution cos(p t)";
    return entry;
}

}  // namespace

const ProblemCatalogEntry& catalog(const std::string& name) {
    static const std::vector<ProblemCatalogEntry> entries = {make_vdpo(), make_tdo(),
                                                             make_brusselator(), make_harmonic()};
    for (const auto& entry : entries)
        if (entry.name == name) return entry;
    std::string names;
    for (const auto& entry : entries) names += (names.empty() ? "" : ", ") + entry.name;
    throw CatalogMissError("catalog: unknown problem '" + name + "' (valid: " + names + ")");
}

std::vector<std::string> catalog_names() { return {"vdpo", "tdo", "brusselator", "harmonic"}; }

}  // namespace stiffgp::ode
