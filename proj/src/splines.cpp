#include "stiffgp/splines.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace stiffgp::splines {

namespace {

// Quartic q(u) = a0 + a1 u + ... + a4 u^4 on [0, 1]: minimum over the
// interval, computed from endpoint values and real critical points.
double quartic_min_on_unit_interval(const std::array<double, 5>& a) {
    double lo = std::min(a[0], a[0] + a[1] + a[2] + a[3] + a[4]);

    // Critical points: roots of a1 + 2 a2 u + 3 a3 u^2 + 4 a4 u^3.
    const double c0 = a[1], c1 = 2 * a[2], c2 = 3 * a[3], c3 = 4 * a[4];
    const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), std::abs(c3)});
    auto consider = [&](double u) {
        if (u > 0.0 && u < 1.0) {
            const double q = a[0] + u * (a[1] + u * (a[2] + u * (a[3] + u * a[4])));
            lo = std::min(lo, q);
        }
    };
    if (scale == 0.0) return lo;

    if (std::abs(c3) > 1e-14 * scale) {
        Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
        companion(0, 2) = -c0 / c3;
        companion(1, 2) = -c1 / c3;
        companion(2, 2) = -c2 / c3;
        companion(1, 0) = 1.0;
        companion(2, 1) = 1.0;
        Eigen::EigenSolver<Eigen::Matrix3d> es(companion, false);
        for (int i = 0; i < 3; ++i) {
            const auto root = es.eigenvalues()[i];
            if (std::abs(root.imag()) < 1e-9 * (1.0 + std::abs(root.real())))
                consider(root.real());
        }
    } else if (std::abs(c2) > 1e-14 * scale) {
        const double disc = c1 * c1 - 4 * c2 * c0;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            consider((-c1 + sq) / (2 * c2));
            consider((-c1 - sq) / (2 * c2));
        }
    } else if (std::abs(c1) > 1e-14 * scale) {
        consider(-c0 / c1);
    }
    return lo;
}

// Monomial coefficients of dH/du for a quintic Hermite segment with local
// data (y0, m0, q0, y1, m1, q1), where m = h*d1 and q = h^2*d2.
std::array<double, 5> quintic_derivative_coefficients(double y0, double m0, double q0, double y1,
                                                      double m1, double q1) {
    return {m0, q0, -30 * y0 - 18 * m0 - 4.5 * q0 + 30 * y1 - 12 * m1 + 1.5 * q1,
            60 * y0 + 32 * m0 + 6 * q0 - 60 * y1 + 28 * m1 - 4 * q1,
            -30 * y0 - 15 * m0 - 2.5 * q0 + 30 * y1 - 15 * m1 + 2.5 * q1};
}

bool quintic_segment_monotone(double y0, double m0, double q0, double y1, double m1, double q1) {
    const auto a = quintic_derivative_coefficients(y0, m0, q0, y1, m1, q1);

    // Bernstein coefficients of the quartic are a cheap sufficient check.
    const double b0 = a[0];
    const double b1 = a[0] + a[1] / 4;
    const double b2 = a[0] + a[1] / 2 + a[2] / 6;
    const double b3 = a[0] + 0.75 * a[1] + a[2] / 2 + a[3] / 4;
    const double b4 = a[0] + a[1] + a[2] + a[3] + a[4];
    if (b0 >= 0 && b1 >= 0 && b2 >= 0 && b3 >= 0 && b4 >= 0) return true;

    const double amax = std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2]), std::abs(a[3]),
                                  std::abs(a[4]), 1e-300});
    return quartic_min_on_unit_interval(a) >= -1e-14 * amax;
}

// Derivative of the interpolating quadratic through three points, evaluated
// at x[at]; second divided difference doubled gives its curvature.
double quadratic_derivative(const std::vector<double>& x, const std::vector<double>& y, int i0,
                            int at) {
    const double x0 = x[i0], x1 = x[i0 + 1], x2 = x[i0 + 2];
    const double t = x[at];
    return y[i0] * (2 * t - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
           y[i0 + 1] * (2 * t - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           y[i0 + 2] * (2 * t - x0 - x1) / ((x2 - x0) * (x2 - x1));
}

double quadratic_curvature(const std::vector<double>& x, const std::vector<double>& y, int i0) {
    const double d01 = (y[i0 + 1] - y[i0]) / (x[i0 + 1] - x[i0]);
    const double d12 = (y[i0 + 2] - y[i0 + 1]) / (x[i0 + 2] - x[i0 + 1]);
    return 2.0 * (d12 - d01) / (x[i0 + 2] - x[i0]);
}

}  // namespace

HermiteSpline::HermiteSpline(SplineOrder order, std::vector<double> knots,
                             std::vector<double> values, std::vector<double> d1,
                             std::vector<double> d2)
    : order_(order),
      knots_(std::move(knots)),
      values_(std::move(values)),
      d1_(std::move(d1)),
      d2_(std::move(d2)) {
    const std::size_t n = knots_.size();
    if (n < 2) throw InvalidSpecError("HermiteSpline: needs at least two knots");
    if (values_.size() != n || d1_.size() != n)
        throw InvalidSpecError("HermiteSpline: value/derivative count mismatch");
    if (order_ == SplineOrder::quintic && d2_.size() != n)
        throw InvalidSpecError("HermiteSpline: quintic requires second derivatives");
    for (std::size_t i = 1; i < n; ++i)
        if (!(knots_[i] > knots_[i - 1]))
            throw InvalidSpecError("HermiteSpline: knots must be strictly increasing");
}

int HermiteSpline::locate(double s) const {
    const double span = knots_.back() - knots_.front();
    const double slack = 1e-12 * span;
    if (s < knots_.front() - slack || s > knots_.back() + slack)
        throw std::domain_error("HermiteSpline: evaluation outside knot range");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
    int idx = static_cast<int>(it - knots_.begin()) - 1;
    return std::clamp(idx, 0, static_cast<int>(knots_.size()) - 2);
}

double HermiteSpline::eval(double s) const {
    const int j = locate(s);
    const double h = knots_[j + 1] - knots_[j];
    const double u = std::clamp((s - knots_[j]) / h, 0.0, 1.0);
    if (order_ == SplineOrder::cubic) {
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * values_[j] + (u3 - 2 * u2 + u) * h * d1_[j] +
               (-2 * u3 + 3 * u2) * values_[j + 1] + (u3 - u2) * h * d1_[j + 1];
    }
    const double m0 = h * d1_[j], m1 = h * d1_[j + 1];
    const double q0 = h * h * d2_[j], q1 = h * h * d2_[j + 1];
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
    return values_[j] * (1 - 10 * u3 + 15 * u4 - 6 * u5) +
           m0 * (u - 6 * u3 + 8 * u4 - 3 * u5) +
           q0 * (0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5) +
           values_[j + 1] * (10 * u3 - 15 * u4 + 6 * u5) + m1 * (-4 * u3 + 7 * u4 - 3 * u5) +
           q1 * (0.5 * u3 - u4 + 0.5 * u5);
}

double HermiteSpline::eval_deriv(double s, int k) const {
    const int max_k = order_ == SplineOrder::cubic ? 1 : 2;
    if (k < 0 || k > max_k)
        throw InvalidSpecError("HermiteSpline: derivative order exceeds spline smoothness");
    if (k == 0) return eval(s);

    const int j = locate(s);
    const double h = knots_[j + 1] - knots_[j];
    const double u = std::clamp((s - knots_[j]) / h, 0.0, 1.0);
    const double u2 = u * u;

    if (order_ == SplineOrder::cubic) {
        return ((6 * u2 - 6 * u) * values_[j] / h + (3 * u2 - 4 * u + 1) * d1_[j] +
                (-6 * u2 + 6 * u) * values_[j + 1] / h + (3 * u2 - 2 * u) * d1_[j + 1]);
    }

    const double m0 = h * d1_[j], m1 = h * d1_[j + 1];
    const double q0 = h * h * d2_[j], q1 = h * h * d2_[j + 1];
    const double u3 = u2 * u, u4 = u3 * u;
    if (k == 1) {
        const double du = values_[j] * (-30 * u2 + 60 * u3 - 30 * u4) +
                          m0 * (1 - 18 * u2 + 32 * u3 - 15 * u4) +
                          q0 * (u - 4.5 * u2 + 6 * u3 - 2.5 * u4) +
                          values_[j + 1] * (30 * u2 - 60 * u3 + 30 * u4) +
                          m1 * (-12 * u2 + 28 * u3 - 15 * u4) +
                          q1 * (1.5 * u2 - 4 * u3 + 2.5 * u4);
        return du / h;
    }
    const double d2u = values_[j] * (-60 * u + 180 * u2 - 120 * u3) +
                       m0 * (-36 * u + 96 * u2 - 60 * u3) +
                       q0 * (1 - 9 * u + 18 * u2 - 10 * u3) +
                       values_[j + 1] * (60 * u - 180 * u2 + 120 * u3) +
                       m1 * (-24 * u + 84 * u2 - 60 * u3) + q1 * (3 * u - 12 * u2 + 10 * u3);
    return d2u / (h * h);
}

HermiteSpline build_zero_slope_spline(const std::vector<double>& knots,
                                      const std::vector<double>& values, SplineOrder order) {
    if (knots.size() < 2) throw InvalidSpecError("build_zero_slope_spline: needs >= 2 knots");
    if (knots.size() != values.size())
        throw InvalidSpecError("build_zero_slope_spline: knot/value count mismatch");
    if (knots.front() != 0.0 || knots.back() != 1.0)
        throw InvalidSpecError("build_zero_slope_spline: knots must span [0, 1]");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1]))
            throw InvalidSpecError("build_zero_slope_spline: knots must be strictly increasing");
        if (!(values[i] > values[i - 1]))
            throw MonotonicityImpossibleError(
                "build_zero_slope_spline: values must be strictly increasing");
    }
    std::vector<double> zeros(knots.size(), 0.0);
    if (order == SplineOrder::cubic)
        return HermiteSpline(order, knots, values, zeros);
    return HermiteSpline(order, knots, values, zeros, zeros);
}

HermiteSpline monotone_quintic_interpolate(const std::vector<double>& abscissae,
                                           const std::vector<double>& ordinates) {
    const int n = static_cast<int>(abscissae.size());
    if (n < 2) throw InvalidSpecError("monotone_quintic_interpolate: needs >= 2 points");
    if (ordinates.size() != abscissae.size())
        throw InvalidSpecError("monotone_quintic_interpolate: size mismatch");
    for (int i = 1; i < n; ++i) {
        if (!(abscissae[i] > abscissae[i - 1]))
            throw InvalidSpecError(
                "monotone_quintic_interpolate: abscissae must be strictly increasing");
        if (ordinates[i] < ordinates[i - 1])
            throw NotMonotoneDataError(
                "monotone_quintic_interpolate: ordinates must be non-decreasing");
    }

    std::vector<double> d(n, 0.0), c(n, 0.0);
    if (n == 2) {
        const double slope = (ordinates[1] - ordinates[0]) / (abscissae[1] - abscissae[0]);
        d[0] = d[1] = slope;
    } else {
        for (int i = 0; i < n; ++i) {
            const int i0 = std::clamp(i - 1, 0, n - 3);
            d[i] = quadratic_derivative(abscissae, ordinates, i0, i);
            c[i] = quadratic_curvature(abscissae, ordinates, i0);
        }
    }

    for (int i = 0; i < n; ++i) d[i] = std::max(d[i], 0.0);
    // A flat data segment must be constant, which pins its knot data to zero.
    for (int i = 0; i + 1 < n; ++i) {
        if (ordinates[i + 1] == ordinates[i]) {
            d[i] = d[i + 1] = 0.0;
            c[i] = c[i + 1] = 0.0;
        }
    }

    auto segment_ok = [&](int i, double li, double lj) {
        const double h = abscissae[i + 1] - abscissae[i];
        return quintic_segment_monotone(ordinates[i], h * li * d[i], h * h * li * c[i],
                                        ordinates[i + 1], h * lj * d[i + 1],
                                        h * h * lj * c[i + 1]);
    };

    // Shrink offending knot data toward zero by the least factor that restores
    // per-segment monotonicity; re-sweep since a knot couples two segments.
    for (int sweep = 0; sweep < 64; ++sweep) {
        bool changed = false;
        for (int i = 0; i + 1 < n; ++i) {
            if (segment_ok(i, 1.0, 1.0)) continue;
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 40; ++it) {
                const double mid = 0.5 * (lo + hi);
                (segment_ok(i, mid, mid) ? lo : hi) = mid;
            }
            d[i] *= lo;
            c[i] *= lo;
            d[i + 1] *= lo;
            c[i + 1] *= lo;
            changed = true;
        }
        if (!changed) break;
        if (sweep == 63) {
            for (int i = 0; i + 1 < n; ++i) {
                if (!segment_ok(i, 1.0, 1.0)) {
                    d[i] = c[i] = 0.0;
                    d[i + 1] = c[i + 1] = 0.0;
                }
            }
        }
    }

    return HermiteSpline(SplineOrder::quintic, abscissae, ordinates, std::move(d), std::move(c));
}

ExtremePointSet find_extrema(const ode::DenseSolution& sol, int component, double tol) {
    if (!(tol > 0)) throw InvalidSpecError("find_extrema: tol must be positive");
    const auto& mesh = sol.mesh();
    const int m = static_cast<int>(mesh.size());

    std::vector<double> g(m);
    double gmax = 0.0;
    for (int j = 0; j < m; ++j) {
        g[j] = sol.derivatives()[j][component];
        gmax = std::max(gmax, std::abs(g[j]));
    }
    ExtremePointSet out;
    if (gmax == 0.0) return out;
    const double zero_tol = 1e-14 * gmax;

    auto push = [&](double t, int sign_before) {
        out.times.push_back(t);
        out.values.push_back(sol.eval_component(t, component));
        out.kinds.push_back(sign_before > 0 ? ExtremumKind::maximum : ExtremumKind::minimum);
    };

    auto bisect = [&](double a, double b) {
        double fa = sol.deriv_component(a, component);
        for (int it = 0; it < 60 && (b - a) > tol; ++it) {
            const double mid = 0.5 * (a + b);
            const double fm = sol.deriv_component(mid, component);
            if (fm == 0.0) return mid;
            if ((fa > 0) == (fm > 0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    };

    int j = 0;
    int last_sign = 0;
    while (j < m) {
        if (std::abs(g[j]) <= zero_tol) {
            int k = j;
            while (k + 1 < m && std::abs(g[k + 1]) <= zero_tol) ++k;
            // Plateau [j, k] collapses to its midpoint; boundary plateaus and
            // inflection plateaus are not extrema.
            if (j > 0 && k < m - 1) {
                const int sign_after = g[k + 1] > 0 ? 1 : -1;
                if (last_sign != 0 && sign_after != last_sign)
                    push(0.5 * (mesh[j] + mesh[k]), last_sign);
            }
            j = k + 1;
            continue;
        }
        const int sign = g[j] > 0 ? 1 : -1;
        if (last_sign != 0 && sign != last_sign && j > 0 && std::abs(g[j - 1]) > zero_tol)
            push(bisect(mesh[j - 1], mesh[j]), last_sign);
        last_sign = sign;
        ++j;
    }
    return out;
}

}  // namespace stiffgp::splines
