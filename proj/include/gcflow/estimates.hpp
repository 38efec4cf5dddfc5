#ifndef GCFLOW_ESTIMATES_HPP
#define GCFLOW_ESTIMATES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gcflow/anisotropy.hpp"
#include "gcflow/errors.hpp"
#include "gcflow/geometry.hpp"
#include "gcflow/solver.hpp"

namespace gcf {

/// Discretization slack applied to every inequality check: the bounds hold
/// for exact smooth solutions, the allowance covers stencil and stepping
/// error at the default resolutions.
inline constexpr double kEstimateSlack = 1.05;

struct CheckRecord {
    std::string name;
    std::string theorem;
    double bound = 0.0;
    double observed = 0.0;
    double margin = 0.0;  // signed; >= 0 means the bound holds outright
    double time = 0.0;    // where the worst margin occurred
    long cell = -1;
    double slack = kEstimateSlack;
    bool pass = false;
    std::string notes;
};

struct EstimateReport {
    std::vector<CheckRecord> records;

    bool all_pass() const {
        for (const auto& r : records) {
            if (!r.pass) return false;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// Closed-form bound values (kept separate from the trace scans so the
// arithmetic can be spot-checked directly).
// ---------------------------------------------------------------------------

/// Gradient estimate bound: max{N sup_{Q_N} v(.,0), N/beta n alpha max(sup f, 1)}.
inline double gradient_bound_value(double height_bound, double beta, int n, double alpha,
                                   double sup_f, double sup_v0) {
    return std::max(height_bound * sup_v0,
                    height_bound / beta * n * alpha * std::max(sup_f, 1.0));
}

/// Curvature-floor constant C1(N, f, n, alpha, beta).
inline double curvature_constant_C1(double height_bound, int n, double alpha, double beta,
                                    double sup_f, double sup_grad_logf_sq) {
    if (!(height_bound > 0.0) || !(alpha > 0.0) || !(beta > 0.0) || !(sup_f > 0.0) ||
        sup_grad_logf_sq < 0.0 || n < 1) {
        throw precondition_error("curvature_constant_C1: inputs must be positive");
    }
    const double lead = std::max(std::pow(sup_f / (n * beta), 1.0 / alpha), 1.0);
    const double inner = n * n * (1.0 + alpha) +
                         (n * alpha + (1.0 + alpha) / alpha * sup_grad_logf_sq) *
                             std::pow(height_bound, n);
    return lead * std::pow(height_bound, (n + alpha) / alpha) *
           std::pow(inner, (1.0 + (n - 1) * alpha) / alpha);
}

/// Speed estimate bound (right side of the (t/(1+t)) K^{1/n} psi^2 inequality).
inline double speed_bound_value(double theta, double lambda_cap, double height_bound, int n,
                                double alpha, double sup_f, double min_f) {
    const double na = n * alpha;
    return std::pow(2.0 * theta, 1.0 + 1.0 / (2.0 * na)) *
           std::max(std::pow(sup_f, 1.0 / na), 1.0) * std::pow(min_f, -1.0 / na) *
           (height_bound * height_bound +
            2.0 * na * (height_bound + lambda_cap * (4.0 * na + 1.0 + 4.0 * na * theta)));
}

inline double barrier_extinction_time(double R, int n, double alpha, double sup_f) {
    if (!(R > 0.0) || !(alpha > 0.0) || !(sup_f > 0.0) || n < 1) {
        throw precondition_error("barrier_extinction_time: inputs must be positive");
    }
    return std::pow(R, 1.0 + n * alpha) / ((1.0 + n * alpha) * sup_f);
}

/// Radius of the shrinking comparison sphere,
/// rho(t) = (R^{1+n alpha} - (1 + n alpha) t sup_f)^{1/(1+n alpha)}.
inline double barrier_radius(double R, double t, int n, double alpha, double sup_f) {
    if (!(R > 0.0) || !(alpha > 0.0) || !(sup_f > 0.0) || n < 1 || t < 0.0) {
        throw precondition_error("barrier_radius: inputs must be positive");
    }
    const double t_star = barrier_extinction_time(R, n, alpha, sup_f);
    if (t >= t_star) {
        throw extinct_error("barrier_radius: past extinction time", t_star);
    }
    const double na = n * alpha;
    return std::pow(std::pow(R, 1.0 + na) - (1.0 + na) * t * sup_f, 1.0 / (1.0 + na));
}

// ---------------------------------------------------------------------------
// Trace scans
// ---------------------------------------------------------------------------

namespace detail {

template <int N>
void require_snapshots(const FlowTrace<N>& trace) {
    if (trace.snapshots.empty()) {
        throw precondition_error("estimate check: trace has no snapshots");
    }
}

}  // namespace detail

/// Gradient estimate along the trace: psi_beta * upsilon against
/// max{N sup_{Q_N} v(.,0), N/beta n alpha max(sup f, 1)}.
template <int N>
CheckRecord gradient_bound_check(const FlowTrace<N>& trace, double height_bound, double beta) {
    detail::require_snapshots(trace);
    if (!(beta > 0.0) || !(height_bound >= beta)) {
        throw hypothesis_error("gradient estimate hypothesis requires beta > 0 and N >= beta");
    }
    const AnisotropyStats stats = anisotropy_stats<N + 1>(trace.desc);

    const GraphGrid<N>& g0 = trace.snapshots.front();
    const CellField<N> v0 = gradient_function_field(g0);
    double sup_v0 = -std::numeric_limits<double>::infinity();
    for (long c = 0; c < g0.cell_count(); ++c) {
        if (!v0.has(c)) continue;
        if (g0.u[static_cast<std::size_t>(c)] < height_bound) sup_v0 = std::max(sup_v0, v0.at(c));
    }
    if (!std::isfinite(sup_v0)) {
        throw degenerate_window_error("gradient_bound_check: initial sublevel set {u < N} is empty");
    }
    const double bound =
        gradient_bound_value(height_bound, beta, N, trace.config.alpha, stats.f_max, sup_v0);

    CheckRecord rec;
    rec.name = "gradient_bound";
    rec.theorem = "gradient estimate";
    rec.bound = bound;
    rec.observed = 0.0;
    for (const GraphGrid<N>& g : trace.snapshots) {
        const CellField<N> ups = gradient_function_field(g);
        for (long c = 0; c < g.cell_count(); ++c) {
            if (!ups.has(c)) continue;
            const double psi =
                std::max(height_bound - beta * g.time - g.u[static_cast<std::size_t>(c)], 0.0);
            const double val = psi * ups.at(c);
            if (val > rec.observed) {
                rec.observed = val;
                rec.time = g.time;
                rec.cell = c;
            }
        }
    }
    rec.margin = rec.bound - rec.observed;
    rec.pass = rec.margin >= -(kEstimateSlack - 1.0) * rec.bound;
    std::ostringstream os;
    os << "sup_f=" << stats.f_max << " sup_v0=" << sup_v0;
    rec.notes = os.str();
    return rec;
}

/// Curvature floor along the trace: psi_beta^{-n(1+1/alpha)} lambda_min against
/// min{N^{-n(1+1/alpha)} inf_{Q_N} lambda_min(.,0), 1/C1}.
template <int N>
CheckRecord curvature_lower_bound_check(const FlowTrace<N>& trace, double height_bound,
                                        double beta) {
    detail::require_snapshots(trace);
    if (!(beta > 0.0) || !(height_bound >= beta)) {
        throw hypothesis_error("curvature estimate hypothesis requires beta > 0 and N >= beta");
    }
    const double alpha = trace.config.alpha;
    const double gamma = N * (1.0 + 1.0 / alpha);
    const AnisotropyStats stats = anisotropy_stats<N + 1>(trace.desc);
    const double c1 = curvature_constant_C1(height_bound, N, alpha, beta, stats.f_max,
                                            stats.sup_grad_logf_sq);

    const GraphGrid<N>& g0 = trace.snapshots.front();
    double inf_lambda0 = std::numeric_limits<double>::infinity();
    for (long c = 0; c < g0.cell_count(); ++c) {
        const Index<N> idx = g0.unlinear(c);
        if (!g0.is_interior(idx)) continue;
        if (g0.u[static_cast<std::size_t>(c)] >= height_bound) continue;
        inf_lambda0 = std::min(inf_lambda0, differentials(g0, idx).lambda_min);
    }
    if (!std::isfinite(inf_lambda0)) {
        throw degenerate_window_error("curvature_lower_bound_check: initial sublevel set {u < N} is empty");
    }
    const double floor = std::min(std::pow(height_bound, -gamma) * inf_lambda0, 1.0 / c1);

    CheckRecord rec;
    rec.name = "curvature_lower_bound";
    rec.theorem = "curvature lower bound";
    rec.bound = floor;
    rec.observed = std::numeric_limits<double>::infinity();
    for (const GraphGrid<N>& g : trace.snapshots) {
        for (long c = 0; c < g.cell_count(); ++c) {
            const Index<N> idx = g.unlinear(c);
            if (!g.is_interior(idx)) continue;
            const double psi =
                std::max(height_bound - beta * g.time - g.u[static_cast<std::size_t>(c)], 0.0);
            if (!(psi > 0.0)) continue;
            const double val = std::pow(psi, -gamma) * differentials(g, idx).lambda_min;
            if (val < rec.observed) {
                rec.observed = val;
                rec.time = g.time;
                rec.cell = c;
            }
        }
    }
    rec.margin = rec.observed - rec.bound;
    rec.pass = rec.margin >= -(kEstimateSlack - 1.0) * rec.bound;
    std::ostringstream os;
    os << "C1=" << c1 << " inf_lambda0=" << inf_lambda0;
    rec.notes = os.str();
    return rec;
}

struct ThetaLambda {
    double theta = 1.0;       // sup of upsilon^2
    double lambda_cap = 0.0;  // sup of 1/lambda_min
    // Alternative reading with the sublevel condition evaluated at the final
    // time instead of the sample time.
    double theta_alt = 1.0;
    double lambda_alt = 0.0;
    bool interpretations_differ = false;
};

/// Constants theta and Lambda over snapshots s in [0, t] restricted to the
/// sublevel set {u < N}. The sublevel condition is evaluated at the sample
/// time s; the variant with the condition at time t is reported alongside.
template <int N>
ThetaLambda theta_lambda(const FlowTrace<N>& trace, double height_bound, double t) {
    detail::require_snapshots(trace);
    const double t_tol = 1e-12 * std::max(1.0, std::abs(t));
    if (t < trace.snapshots.front().time - t_tol || t > trace.snapshots.back().time + t_tol) {
        throw precondition_error("theta_lambda: t outside the recorded trace range");
    }

    // Sublevel set at the last recorded time <= t, for the alternative reading.
    const GraphGrid<N>* last = nullptr;
    for (const GraphGrid<N>& g : trace.snapshots) {
        if (g.time <= t + t_tol) last = &g;
    }

    ThetaLambda out;
    bool any = false, any_alt = false;
    out.theta = out.theta_alt = -std::numeric_limits<double>::infinity();
    out.lambda_cap = out.lambda_alt = -std::numeric_limits<double>::infinity();
    for (const GraphGrid<N>& g : trace.snapshots) {
        if (g.time > t + t_tol) break;
        for (long c = 0; c < g.cell_count(); ++c) {
            const Index<N> idx = g.unlinear(c);
            if (!g.is_interior(idx)) continue;
            const bool in_now = g.u[static_cast<std::size_t>(c)] < height_bound;
            const bool in_final = last && last->is_interior(idx) &&
                                  last->u[static_cast<std::size_t>(c)] < height_bound;
            if (!in_now && !in_final) continue;
            const PointGeometry<N> geo = differentials(g, idx);
            const double v2 = geo.upsilon * geo.upsilon;
            const double linv = 1.0 / geo.lambda_min;
            if (in_now) {
                out.theta = std::max(out.theta, v2);
                out.lambda_cap = std::max(out.lambda_cap, linv);
                any = true;
            }
            if (in_final) {
                out.theta_alt = std::max(out.theta_alt, v2);
                out.lambda_alt = std::max(out.lambda_alt, linv);
                any_alt = true;
            }
        }
    }
    if (!any) {
        throw degenerate_window_error("theta_lambda: sublevel set {u < N} is empty on [0, t]");
    }
    if (!any_alt) {
        out.theta_alt = out.theta;
        out.lambda_alt = out.lambda_cap;
    }
    out.interpretations_differ =
        out.theta_alt != out.theta || out.lambda_alt != out.lambda_cap;
    return out;
}

/// Speed estimate along the trace: (t/(1+t)) K^{1/n} psi^2 against the bound
/// built from theta and Lambda, evaluated at every recorded time.
template <int N>
CheckRecord speed_bound_check(const FlowTrace<N>& trace, double height_bound) {
    detail::require_snapshots(trace);
    if (!(height_bound > 0.0)) {
        throw hypothesis_error("speed estimate requires N > 0");
    }
    const double alpha = trace.config.alpha;
    const AnisotropyStats stats = anisotropy_stats<N + 1>(trace.desc);

    CheckRecord rec;
    rec.name = "speed_bound";
    rec.theorem = "speed estimate";
    rec.margin = std::numeric_limits<double>::infinity();

    // Running sups give theta(t), Lambda(t) with the sublevel condition at the
    // sample time; see theta_lambda for the alternative reading.
    double theta = -std::numeric_limits<double>::infinity();
    double lambda_cap = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const GraphGrid<N>& g : trace.snapshots) {
        double observed = 0.0;
        long arg_cell = -1;
        for (long c = 0; c < g.cell_count(); ++c) {
            const Index<N> idx = g.unlinear(c);
            if (!g.is_interior(idx)) continue;
            const PointGeometry<N> geo = differentials(g, idx);
            if (g.u[static_cast<std::size_t>(c)] < height_bound) {
                theta = std::max(theta, geo.upsilon * geo.upsilon);
                lambda_cap = std::max(lambda_cap, 1.0 / geo.lambda_min);
                any = true;
            }
            const double psi = std::max(height_bound - g.u[static_cast<std::size_t>(c)], 0.0);
            const double val = g.time / (1.0 + g.time) * std::pow(geo.gauss, 1.0 / N) * psi * psi;
            if (val > observed) {
                observed = val;
                arg_cell = c;
            }
        }
        if (!any) {
            throw degenerate_window_error("speed_bound_check: sublevel set {u < N} is empty");
        }
        const double bound =
            speed_bound_value(theta, lambda_cap, height_bound, N, alpha, stats.f_max, stats.f_min);
        if (bound - observed < rec.margin) {
            rec.margin = bound - observed;
            rec.bound = bound;
            rec.observed = observed;
            rec.time = g.time;
            rec.cell = arg_cell;
        }
    }
    rec.pass = rec.margin >= -(kEstimateSlack - 1.0) * rec.bound;
    std::ostringstream os;
    os << "theta=" << theta << " Lambda=" << lambda_cap
       << " (sublevel condition at the sample time s)";
    rec.notes = os.str();
    return rec;
}

/// Comparison against the shrinking-sphere barrier: the ball of radius
/// rho(t) about `center` must stay enclosed by the graph (cap height above u)
/// at every pre-extinction snapshot.
template <int N>
CheckRecord enclosure_check(const FlowTrace<N>& trace, const Vec<N + 1>& center, double R) {
    detail::require_snapshots(trace);
    if (!(R > 0.0)) throw precondition_error("enclosure_check: R must be positive");
    const double alpha = trace.config.alpha;
    const AnisotropyStats stats = anisotropy_stats<N + 1>(trace.desc);
    const double t_star = barrier_extinction_time(R, N, alpha, stats.f_max);

    const Vec<N> cx = center.template head<N>();
    const double ch = center[N];

    // Initial enclosure is a hard precondition, not a margin.
    const GraphGrid<N>& g0 = trace.snapshots.front();
    for (long c = 0; c < g0.cell_count(); ++c) {
        if (!g0.active[static_cast<std::size_t>(c)]) continue;
        const Vec<N> x = g0.position(g0.unlinear(c));
        const double disc = R * R - (x - cx).squaredNorm();
        if (disc <= 0.0) continue;
        const double cap = ch - std::sqrt(disc);
        if (g0.u[static_cast<std::size_t>(c)] > cap + 1e-12) {
            throw not_enclosed_error("enclosure_check: ball is not enclosed by the initial graph");
        }
    }

    CheckRecord rec;
    rec.name = "enclosure";
    rec.theorem = "shrinking-sphere barrier";
    rec.bound = R;
    rec.margin = std::numeric_limits<double>::infinity();
    int vacuous = 0;
    for (const GraphGrid<N>& g : trace.snapshots) {
        if (g.time >= t_star) {
            ++vacuous;
            continue;
        }
        const double rho = barrier_radius(R, g.time, N, alpha, stats.f_max);
        for (long c = 0; c < g.cell_count(); ++c) {
            if (!g.active[static_cast<std::size_t>(c)]) continue;
            const Vec<N> x = g.position(g.unlinear(c));
            const double disc = rho * rho - (x - cx).squaredNorm();
            if (disc <= 0.0) continue;
            const double margin = (ch - std::sqrt(disc)) - g.u[static_cast<std::size_t>(c)];
            if (margin < rec.margin) {
                rec.margin = margin;
                rec.observed = margin;
                rec.time = g.time;
                rec.cell = c;
            }
        }
    }
    rec.pass = rec.margin >= -(kEstimateSlack - 1.0) * R;
    std::ostringstream os;
    os << "t_star=" << t_star << " vacuous_snapshots=" << vacuous;
    rec.notes = os.str();
    return rec;
}

}  // namespace gcf

#endif  // GCFLOW_ESTIMATES_HPP
