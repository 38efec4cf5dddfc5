#ifndef GCFLOW_ORACLES_HPP
#define GCFLOW_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "gcflow/anisotropy.hpp"
#include "gcflow/errors.hpp"
#include "gcflow/geometry.hpp"
#include "gcflow/grid.hpp"

namespace gcf {

/// Exact translating solution u(x,t) = t - log cos x of the n = 1, alpha = 1,
/// isotropic graph flow du/dt = u'' / (1 + u'^2), defined on |x| < pi/2.
inline double grim_reaper(double x, double t) {
    if (!(std::abs(x) < 0.5 * std::numbers::pi)) {
        throw oracle_domain_error("grim_reaper: |x| must be below pi/2");
    }
    return t - std::log(std::cos(x));
}

/// Tabulated vertical translator of the n = 1 scalar flow:
///   f(nu(u')) (u'')^alpha / (1 + u'^2)^{(3 alpha - 1)/2} = c,
/// integrated as u'' = (c (1 + u'^2)^{(3 alpha - 1)/2} / f)^{1/alpha}
/// from u(0) = 0, u'(0) = 0. u_exact(x, t) = profile(x) + c t.
struct TranslatorProfile {
    double alpha = 1.0;
    double c = 1.0;
    double half_width = 1.0;
    AnisotropyDescriptor desc;
    double step = 1e-4;

    std::vector<double> xs;  // ascending, symmetric about 0
    std::vector<double> us;
    std::vector<double> dus;

    bool truncated = false;      // integration stopped before half_width
    double reached_width = 0.0;  // largest |x| covered
    double consistency_error = 0.0;  // halved-step integration check

    double value(double x) const {
        if (std::abs(x) > reached_width + 1e-12) {
            throw oracle_domain_error("translator profile: x outside tabulated domain");
        }
        // Locate the Hermite segment.
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        if (hi == 0) hi = 1;
        if (hi >= xs.size()) hi = xs.size() - 1;
        const std::size_t lo = hi - 1;
        const double h = xs[hi] - xs[lo];
        const double s = (x - xs[lo]) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * us[lo] + h10 * h * dus[lo] + h01 * us[hi] + h11 * h * dus[hi];
    }

    double slope(double x) const {
        if (std::abs(x) > reached_width + 1e-12) {
            throw oracle_domain_error("translator profile: x outside tabulated domain");
        }
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        if (hi == 0) hi = 1;
        if (hi >= xs.size()) hi = xs.size() - 1;
        const std::size_t lo = hi - 1;
        const double h = xs[hi] - xs[lo];
        const double s = (x - xs[lo]) / h;
        const double dh00 = (6 * s * s - 6 * s) / h;
        const double dh10 = 3 * s * s - 4 * s + 1;
        const double dh01 = (-6 * s * s + 6 * s) / h;
        const double dh11 = 3 * s * s - 2 * s;
        return dh00 * us[lo] + dh10 * dus[lo] + dh01 * us[hi] + dh11 * dus[hi];
    }

    double u_exact(double x, double t) const { return value(x) + c * t; }
};

namespace detail {

inline double translator_rhs(double alpha, double c, const AnisotropyDescriptor& desc, double p) {
    const double ups = std::sqrt(1.0 + p * p);
    const Vec<2> nu(p / ups, -1.0 / ups);
    const double f = evaluate_support<2>(desc, nu);
    return std::pow(c * std::pow(1.0 + p * p, 0.5 * (3.0 * alpha - 1.0)) / f, 1.0 / alpha);
}

// One-sided RK4 integration; dir is +1 or -1.
inline void integrate_translator(double alpha, double c, const AnisotropyDescriptor& desc,
                                 double half_width, double step, int dir,
                                 std::vector<double>& xs, std::vector<double>& us,
                                 std::vector<double>& dus, bool& truncated) {
    const auto rhs = [&](double p) { return translator_rhs(alpha, c, desc, p); };
    double x = 0.0, u = 0.0, p = 0.0;
    const double h = dir * step;
    const long n_steps = std::lround(half_width / step);
    for (long k = 0; k < n_steps; ++k) {
        const double k1u = p, k1p = rhs(p);
        const double k2u = p + 0.5 * h * k1p, k2p = rhs(p + 0.5 * h * k1p);
        const double k3u = p + 0.5 * h * k2p, k3p = rhs(p + 0.5 * h * k2p);
        const double k4u = p + h * k3p, k4p = rhs(p + h * k3p);
        u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
        p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
        x += h;
        if (!std::isfinite(u) || !std::isfinite(p) || std::abs(p) > 1e8) {
            truncated = true;
            break;
        }
        xs.push_back(x);
        us.push_back(u);
        dus.push_back(p);
    }
}

}  // namespace detail

inline TranslatorProfile translator_profile(double alpha, double c,
                                            const AnisotropyDescriptor& desc, double half_width,
                                            double step = 1e-4) {
    if (!(alpha > 0.0) || !(c > 0.0) || !(half_width > 0.0) || !(step > 0.0)) {
        throw precondition_error("translator_profile: alpha, c, half_width, step must be positive");
    }
    convexity_certificate<2>(desc, 1024);

    const auto run = [&](double s) {
        TranslatorProfile prof;
        prof.alpha = alpha;
        prof.c = c;
        prof.half_width = half_width;
        prof.desc = desc;
        prof.step = s;
        std::vector<double> xr{0.0}, ur{0.0}, pr{0.0};
        std::vector<double> xl, ul, pl;
        detail::integrate_translator(alpha, c, desc, half_width, s, +1, xr, ur, pr, prof.truncated);
        detail::integrate_translator(alpha, c, desc, half_width, s, -1, xl, ul, pl, prof.truncated);
        prof.xs.reserve(xl.size() + xr.size());
        for (auto it = xl.rbegin(); it != xl.rend(); ++it) prof.xs.push_back(*it);
        for (auto it = ul.rbegin(); it != ul.rend(); ++it) prof.us.push_back(*it);
        for (auto it = pl.rbegin(); it != pl.rend(); ++it) prof.dus.push_back(*it);
        prof.xs.insert(prof.xs.end(), xr.begin(), xr.end());
        prof.us.insert(prof.us.end(), ur.begin(), ur.end());
        prof.dus.insert(prof.dus.end(), pr.begin(), pr.end());
        prof.reached_width = std::min(-prof.xs.front(), prof.xs.back());
        return prof;
    };

    TranslatorProfile prof = run(step);
    const TranslatorProfile check = run(0.5 * step);
    double err = 0.0;
    const double w = std::min(prof.reached_width, check.reached_width);
    for (int k = 0; k <= 32; ++k) {
        const double x = -w + 2.0 * w * k / 32;
        err = std::max(err, std::abs(prof.value(x) - check.value(x)));
    }
    prof.consistency_error = err;
    return prof;
}

/// Space-time polynomial u(x,t) = q0(x) + t q1(x) + t^2 q2(x) with quadratic
/// q0, q1, q2. The t^2 block exists so that forward-Euler runs have a
/// measurable truncation error: profiles linear in t are integrated exactly
/// when the spatial stencils are exact.
template <int N>
struct QuadraticProfile {
    double c0 = 0.0;
    Vec<N> b0 = Vec<N>::Zero();
    Mat<N> A0 = Mat<N>::Identity();
    double c1 = 0.0;
    Vec<N> b1 = Vec<N>::Zero();
    Mat<N> A1 = Mat<N>::Zero();
    double c2 = 0.0;
    Vec<N> b2 = Vec<N>::Zero();
    Mat<N> A2 = Mat<N>::Zero();

    double value(const Vec<N>& x, double t) const {
        return c0 + b0.dot(x) + 0.5 * x.dot(A0 * x) +
               t * (c1 + b1.dot(x) + 0.5 * x.dot(A1 * x)) +
               t * t * (c2 + b2.dot(x) + 0.5 * x.dot(A2 * x));
    }
    Vec<N> grad(const Vec<N>& x, double t) const {
        return b0 + A0 * x + t * (b1 + A1 * x) + t * t * (b2 + A2 * x);
    }
    Mat<N> hess(double t) const { return A0 + t * A1 + t * t * A2; }
    double dt(const Vec<N>& x, double t) const {
        return c1 + b1.dot(x) + 0.5 * x.dot(A1 * x) +
               2.0 * t * (c2 + b2.dot(x) + 0.5 * x.dot(A2 * x));
    }
};

template <int N>
using SourceFn = std::function<double(const Vec<N>&, double)>;

/// Manufactured forcing S = du/dt - rhs(u) that makes `profile` an exact
/// solution of the forced flow. The profile must stay strictly convex on
/// [0, t_end]; D2u is a polynomial in t, checked on a fine time sample.
template <int N>
SourceFn<N> manufactured_source(const QuadraticProfile<N>& profile, const AnisotropyDescriptor& desc,
                                double alpha, double t_end) {
    for (int k = 0; k <= 32; ++k) {
        const double t = t_end * k / 32;
        if (!(detail::d2u_lambda_min<N>(profile.hess(t)) > 0.0)) {
            throw invalid_argument_error("manufactured_source: profile is not strictly convex on [0, t_end]");
        }
    }
    return [profile, desc, alpha](const Vec<N>& x, double t) {
        return profile.dt(x, t) -
               speed_from_derivatives<N>(desc, alpha, profile.grad(x, t), profile.hess(t));
    };
}

/// Initial graph enclosing the ball B_R(center): the paraboloid osculating the
/// lower spherical cap at its apex, u0(x) = (c_h - R) + |x - c_x|^2 / (2R).
template <int N>
GraphGrid<N> sphere_cap_initial(double R, const Vec<N + 1>& center, const Vec<N>& origin,
                                double spacing, const Index<N>& extents) {
    if (!(R > 0.0)) throw precondition_error("sphere_cap_initial: R must be positive");
    GraphGrid<N> grid(origin, spacing, extents);
    const Vec<N> cx = center.template head<N>();
    const double ch = center[N];
    for (int a = 0; a < N; ++a) {
        const double lo = origin[a];
        const double hi = origin[a] + spacing * (extents[a] - 1);
        if (cx[a] - R < lo || cx[a] + R > hi) {
            throw invalid_argument_error("sphere_cap_initial: shadow disk of the ball does not fit in the grid");
        }
    }
    for (long c = 0; c < grid.cell_count(); ++c) {
        const Vec<N> x = grid.position(grid.unlinear(c));
        grid.u[static_cast<std::size_t>(c)] = (ch - R) + (x - cx).squaredNorm() / (2.0 * R);
    }
    return grid;
}

}  // namespace gcf

#endif  // GCFLOW_ORACLES_HPP
