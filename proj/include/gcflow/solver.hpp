#ifndef GCFLOW_SOLVER_HPP
#define GCFLOW_SOLVER_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "gcflow/anisotropy.hpp"
#include "gcflow/errors.hpp"
#include "gcflow/geometry.hpp"
#include "gcflow/grid.hpp"
#include "gcflow/oracles.hpp"

namespace gcf {

enum class BoundaryPolicy { frozen_dirichlet, exact_dirichlet };

template <int N>
using BoundaryFn = std::function<double(const Vec<N>&, double)>;

template <int N>
struct FlowConfig {
    double alpha = 1.0;
    double t_end = 0.0;
    double cfl_safety = 0.2;
    double height_cap = std::numeric_limits<double>::infinity();
    BoundaryPolicy boundary_policy = BoundaryPolicy::frozen_dirichlet;
    BoundaryFn<N> boundary_values;  // required for exact_dirichlet
    int snapshot_stride = 10;
    SourceFn<N> source;  // optional forcing S(x, t)
    int max_retries = 10;

    // 0 means "use the CFL rule"; a positive value pins dt (still capped by
    // the remaining time), used by refinement studies and matched-step tests.
    double dt_override = 0.0;

    // Cells whose smallest D2u eigenvalue falls below this are treated as
    // momentarily frozen: zero speed, excluded from the CFL maximum. Keeps
    // the explicit scheme from stalling on the degenerate layer that forms
    // against frozen Dirichlet boundaries when alpha < 1.
    double degeneracy_tol = 1e-9;
};

struct StepDiagnostics {
    double t = 0.0;
    double dt = 0.0;
    double max_speed = 0.0;
    double min_lambda_min = 0.0;
    int retries = 0;
};

template <int N>
struct FlowTrace {
    AnisotropyDescriptor desc;
    FlowConfig<N> config;
    std::vector<GraphGrid<N>> snapshots;  // each carries its time
    std::vector<StepDiagnostics> diagnostics;
    bool failed = false;
    std::string failure_reason;
};

namespace detail {

template <int N>
struct StepFields {
    std::vector<long> cells;        // interior active cells
    std::vector<double> speed;      // rhs at those cells (0 when frozen)
    std::vector<std::uint8_t> frozen;
    double cfl_max = 0.0;           // max of alpha * rhs * lambda_max(D2u^-1) * n
    double max_speed = 0.0;
    double min_lambda_min = std::numeric_limits<double>::infinity();
};

template <int N>
StepFields<N> flow_fields(const GraphGrid<N>& grid, const AnisotropyDescriptor& desc,
                          const FlowConfig<N>& config) {
    StepFields<N> out;
    for (long c = 0; c < grid.cell_count(); ++c) {
        const Index<N> idx = grid.unlinear(c);
        if (!grid.is_interior(idx)) continue;
        const PointGeometry<N> geo = differentials(grid, idx);
        const double lam_d2u = d2u_lambda_min<N>(geo.D2u);
        out.cells.push_back(c);
        out.min_lambda_min = std::min(out.min_lambda_min, geo.lambda_min);
        if (lam_d2u < config.degeneracy_tol) {
            out.speed.push_back(0.0);
            out.frozen.push_back(1);
            continue;
        }
        const double rho = evaluate_support<N + 1>(desc, geo.normal);
        const double du2 = geo.Du.squaredNorm();
        const double speed = rho * std::pow(geo.D2u.determinant(), config.alpha) /
                             std::pow(1.0 + du2, 0.5 * (config.alpha * (N + 2) - 1.0));
        out.speed.push_back(speed);
        out.frozen.push_back(0);
        out.max_speed = std::max(out.max_speed, speed);
        out.cfl_max = std::max(out.cfl_max, config.alpha * speed * (1.0 / lam_d2u) * N);
    }
    return out;
}

}  // namespace detail

/// Explicit-scheme stable step: cfl_safety * h^2 over the largest linearized
/// diffusion coefficient alpha * rhs * lambda_max((D2u)^{-1}) * n, capped at
/// the remaining time t_end - t.
template <int N>
double stable_dt(const GraphGrid<N>& grid, const AnisotropyDescriptor& desc,
                 const FlowConfig<N>& config) {
    const double remaining = config.t_end - grid.time;
    const auto fields = detail::flow_fields(grid, desc, config);
    if (fields.cfl_max <= 0.0) return remaining;
    const double dt = config.cfl_safety * grid.spacing * grid.spacing / fields.cfl_max;
    return (remaining > 0.0) ? std::min(dt, remaining) : dt;
}

/// One forward-Euler update u <- u + dt (speed + S). Boundary cells follow
/// the boundary policy; cells reaching the height cap are deactivated. On a
/// convexity loss after the update, the step is retried with dt/2 up to
/// max_retries times before failing hard.
template <int N>
GraphGrid<N> step(const GraphGrid<N>& grid, const AnisotropyDescriptor& desc,
                  const FlowConfig<N>& config, StepDiagnostics* diag = nullptr) {
    if (config.boundary_policy == BoundaryPolicy::exact_dirichlet && !config.boundary_values) {
        throw precondition_error("step: exact_dirichlet requires boundary_values");
    }
    const auto fields = detail::flow_fields(grid, desc, config);
    const double remaining = config.t_end - grid.time;
    double dt0;
    if (config.dt_override > 0.0) {
        dt0 = (remaining > 0.0) ? std::min(config.dt_override, remaining) : config.dt_override;
    } else if (fields.cfl_max > 0.0) {
        const double dt_cfl = config.cfl_safety * grid.spacing * grid.spacing / fields.cfl_max;
        dt0 = (remaining > 0.0) ? std::min(dt_cfl, remaining) : dt_cfl;
    } else {
        dt0 = remaining;
    }
    if (!(dt0 > 0.0)) {
        throw numerical_failure_error("step: nonpositive time step (already at t_end?)");
    }

    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        const double dt = dt0 * std::pow(0.5, attempt);
        if (dt < 1e-300) {
            throw numerical_failure_error("step: time step collapsed to zero");
        }
        GraphGrid<N> next = grid;
        next.time = grid.time + dt;
        for (std::size_t k = 0; k < fields.cells.size(); ++k) {
            const long c = fields.cells[k];
            if (fields.frozen[k]) continue;
            double rhs = fields.speed[k];
            if (config.source) {
                rhs += config.source(grid.position(grid.unlinear(c)), grid.time);
            }
            next.u[static_cast<std::size_t>(c)] = grid.u[static_cast<std::size_t>(c)] + dt * rhs;
        }
        if (config.boundary_policy == BoundaryPolicy::exact_dirichlet) {
            for (long c = 0; c < grid.cell_count(); ++c) {
                const Index<N> idx = grid.unlinear(c);
                if (!grid.is_active(idx) || grid.is_interior(idx)) continue;
                next.u[static_cast<std::size_t>(c)] = config.boundary_values(grid.position(idx), next.time);
            }
        }

        // Accept only if discrete convexity survived at every cell that was
        // updated. A frozen cell sits still while its neighbors move, so it
        // can be dragged below degeneracy; it then leaves the active graph
        // (like the height cap) instead of aborting the run.
        bool convex = true;
        std::vector<long> deactivate;
        for (std::size_t k = 0; k < fields.cells.size() && convex; ++k) {
            const Index<N> idx = next.unlinear(fields.cells[k]);
            const Mat<N> d2u = detail::central_hessian(next, idx);
            if (!(detail::d2u_lambda_min<N>(d2u) > 0.0)) {
                if (fields.frozen[k]) {
                    deactivate.push_back(fields.cells[k]);
                } else {
                    convex = false;
                }
            }
        }
        if (!convex) continue;
        for (const long c : deactivate) next.active[static_cast<std::size_t>(c)] = 0;

        if (std::isfinite(config.height_cap)) {
            for (long c = 0; c < next.cell_count(); ++c) {
                if (next.active[static_cast<std::size_t>(c)] &&
                    next.u[static_cast<std::size_t>(c)] >= config.height_cap) {
                    next.active[static_cast<std::size_t>(c)] = 0;
                }
            }
        }
        if (diag) {
            diag->t = next.time;
            diag->dt = dt;
            diag->max_speed = fields.max_speed;
            diag->min_lambda_min = fields.min_lambda_min;
            diag->retries = attempt;
        }
        return next;
    }
    throw convexity_loss_error("step: convexity could not be preserved after " +
                                   std::to_string(config.max_retries) + " dt halvings",
                               -1, grid.time);
}

/// Integrate to t_end, recording a snapshot every snapshot_stride steps plus
/// the initial and final states. A convexity failure aborts with the partial
/// trace and a failure marker instead of throwing.
template <int N>
FlowTrace<N> run(const GraphGrid<N>& grid0, const AnisotropyDescriptor& desc,
                 const FlowConfig<N>& config) {
    if (!(config.t_end > 0.0)) throw precondition_error("run: t_end must be positive");
    if (config.snapshot_stride < 1) throw precondition_error("run: snapshot_stride must be >= 1");
    validate_grid(grid0);

    FlowTrace<N> trace;
    trace.desc = desc;
    trace.config = config;
    trace.snapshots.push_back(grid0);

    GraphGrid<N> grid = grid0;
    long steps = 0;
    const double t_tol = 1e-12 * config.t_end;
    try {
        while (grid.time < config.t_end - t_tol) {
            StepDiagnostics diag;
            grid = step(grid, desc, config, &diag);
            trace.diagnostics.push_back(diag);
            ++steps;
            if (steps % config.snapshot_stride == 0 && grid.time < config.t_end - t_tol) {
                trace.snapshots.push_back(grid);
            }
        }
        trace.snapshots.push_back(grid);
    } catch (const convexity_loss_error& e) {
        trace.failed = true;
        trace.failure_reason = e.what();
        if (trace.snapshots.back().time < grid.time) trace.snapshots.push_back(grid);
    }
    return trace;
}

template <int N>
struct VEvolutionResult {
    CellField<N> residual;
    double max_abs = 0.0;
    bool coarse_time_spacing = false;  // snapshot spacing above h^2
};

/// Residual of the gradient-function evolution identity
///   d/dt upsilon = L upsilon - 2 upsilon^{-1} |grad upsilon|_L^2
///                  - alpha f K^alpha H upsilon
/// where L = alpha f K^alpha b^{ij} cov_i cov_j and b = h^{-1}. The time
/// derivative is the material one: central time differencing of the
/// upsilon field plus advection by the horizontal velocity -K^alpha W(nu)
/// of the flow (W = Wulff point of the normal). Covariant Hessians use the
/// graph Christoffel symbols u_k u_ij / (1 + |Du|^2).
template <int N>
VEvolutionResult<N> verify_v_evolution(const FlowTrace<N>& trace, const AnisotropyDescriptor& desc,
                                       std::size_t k) {
    if (k == 0 || k + 1 >= trace.snapshots.size()) {
        throw precondition_error("verify_v_evolution: snapshot index must be interior to the trace");
    }
    const GraphGrid<N>& gm = trace.snapshots[k - 1];
    const GraphGrid<N>& g0 = trace.snapshots[k];
    const GraphGrid<N>& gp = trace.snapshots[k + 1];
    const double alpha = trace.config.alpha;
    const double h = g0.spacing;

    VEvolutionResult<N> out;
    out.residual = CellField<N>(g0.cell_count());
    out.coarse_time_spacing =
        std::max(g0.time - gm.time, gp.time - g0.time) > h * h + 1e-15;

    const CellField<N> um = gradient_function_field(gm);
    const CellField<N> u0 = gradient_function_field(g0);
    const CellField<N> up = gradient_function_field(gp);

    const double dt2 = gp.time - gm.time;
    const double inv2h = 1.0 / (2.0 * h);
    const double invh2 = 1.0 / (h * h);

    for (long c = 0; c < g0.cell_count(); ++c) {
        const Index<N> idx = g0.unlinear(c);
        if (!u0.has(c) || !um.has(c) || !up.has(c)) continue;

        // The upsilon stencil needs the full neighborhood defined at time k.
        bool ok = true;
        if constexpr (N == 1) {
            for (int di = -1; di <= 1 && ok; ++di) {
                ok = u0.has(g0.linear({idx[0] + di}));
            }
        } else {
            for (int di = -1; di <= 1 && ok; ++di) {
                for (int dj = -1; dj <= 1 && ok; ++dj) {
                    const Index<2> nb{idx[0] + di, idx[1] + dj};
                    ok = g0.in_bounds(nb) && u0.has(g0.linear(nb));
                }
            }
        }
        if (!ok) continue;

        const PointGeometry<N> geo = differentials(g0, idx);
        const double f = evaluate_support<N + 1>(desc, geo.normal);
        const double fk = alpha * f * std::pow(geo.gauss, alpha);

        // Gradient and Hessian of the upsilon field.
        Vec<N> dups;
        Mat<N> d2ups;
        for (int a = 0; a < N; ++a) {
            Index<N> p = idx, m = idx;
            ++p[a];
            --m[a];
            dups[a] = (u0.at(g0.linear(p)) - u0.at(g0.linear(m))) * inv2h;
            d2ups(a, a) =
                (u0.at(g0.linear(p)) - 2.0 * u0.at(c) + u0.at(g0.linear(m))) * invh2;
        }
        if constexpr (N == 2) {
            const double v = (u0.at(g0.linear({idx[0] + 1, idx[1] + 1})) -
                              u0.at(g0.linear({idx[0] + 1, idx[1] - 1})) -
                              u0.at(g0.linear({idx[0] - 1, idx[1] + 1})) +
                              u0.at(g0.linear({idx[0] - 1, idx[1] - 1}))) *
                             0.25 * invh2;
            d2ups(0, 1) = d2ups(1, 0) = v;
        }

        const double ups = u0.at(c);
        const double ups2 = 1.0 + geo.Du.squaredNorm();
        const Mat<N> b = geo.second_form.inverse();

        double lap = 0.0, grad_sq = 0.0;
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                const double christoffel_term = geo.Du.dot(dups) * geo.D2u(i, j) / ups2;
                // cov_i cov_j upsilon = d2 - Gamma^k_ij d_k, Gamma^k_ij = u_k u_ij / (1+|Du|^2)
                const double cov = d2ups(i, j) - christoffel_term;
                lap += b(i, j) * cov;
                grad_sq += b(i, j) * dups[i] * dups[j];
            }
        }
        const double rhs = fk * lap - 2.0 / ups * fk * grad_sq - fk * geo.mean * ups;

        const double dt_ups = (up.at(c) - um.at(c)) / dt2;
        const Vec<N + 1> wp = wulff_point<N + 1>(desc, geo.normal);
        const Vec<N> xdot = -std::pow(geo.gauss, alpha) * wp.template head<N>();
        const double advect = xdot.dot(dups);

        const double res = dt_ups + advect - rhs;
        out.residual.set(c, res);
        out.max_abs = std::max(out.max_abs, std::abs(res));
    }
    return out;
}

}  // namespace gcf

#endif  // GCFLOW_SOLVER_HPP
