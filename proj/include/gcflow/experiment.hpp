#ifndef GCFLOW_EXPERIMENT_HPP
#define GCFLOW_EXPERIMENT_HPP

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "gcflow/estimates.hpp"
#include "gcflow/io.hpp"
#include "gcflow/oracles.hpp"
#include "gcflow/solver.hpp"

namespace gcf::io {

// Exit codes of the CLI surface.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

struct ExperimentResult {
    int exit_code = kExitPass;
    std::string message;
    json report;
};

namespace detail {

template <int N>
QuadraticProfile<N> profile_from_spec(const SourceSpec& s) {
    QuadraticProfile<N> p;
    p.c0 = s.c0;
    p.c1 = s.c1;
    p.c2 = s.c2;
    for (int a = 0; a < N; ++a) {
        p.b0[a] = s.b0[static_cast<std::size_t>(a)];
        p.b1[a] = s.b1[static_cast<std::size_t>(a)];
        if (!s.b2.empty()) p.b2[a] = s.b2[static_cast<std::size_t>(a)];
        for (int b = 0; b < N; ++b) {
            p.A0(a, b) = s.A0[static_cast<std::size_t>(a * N + b)];
            p.A1(a, b) = s.A1[static_cast<std::size_t>(a * N + b)];
            if (!s.A2.empty()) p.A2(a, b) = s.A2[static_cast<std::size_t>(a * N + b)];
        }
    }
    return p;
}

template <int N>
GraphGrid<N> build_initial_grid(const ExperimentConfig& c,
                                const std::optional<TranslatorProfile>& translator) {
    Vec<N> origin;
    Index<N> extents;
    for (int a = 0; a < N; ++a) {
        origin[a] = c.grid_origin[static_cast<std::size_t>(a)];
        extents[a] = c.grid_extents[static_cast<std::size_t>(a)];
    }
    if (c.initial_kind == "sphere_cap") {
        Vec<N + 1> center;
        for (int a = 0; a <= N; ++a) center[a] = c.cap_center[static_cast<std::size_t>(a)];
        return sphere_cap_initial<N>(c.cap_radius, center, origin, c.grid_spacing, extents);
    }
    GraphGrid<N> grid(origin, c.grid_spacing, extents);
    if (c.initial_kind == "paraboloid") {
        for (long cell = 0; cell < grid.cell_count(); ++cell) {
            grid.u[static_cast<std::size_t>(cell)] =
                c.paraboloid_coeff * grid.position(grid.unlinear(cell)).squaredNorm();
        }
    } else if (c.initial_kind == "grim_reaper") {
        static_assert(N >= 1);
        for (long cell = 0; cell < grid.cell_count(); ++cell) {
            grid.u[static_cast<std::size_t>(cell)] =
                grim_reaper(grid.position(grid.unlinear(cell))[0], c.grim_t0);
        }
    } else if (c.initial_kind == "translator") {
        for (long cell = 0; cell < grid.cell_count(); ++cell) {
            grid.u[static_cast<std::size_t>(cell)] =
                translator->value(grid.position(grid.unlinear(cell))[0]);
        }
    } else if (c.initial_kind == "table") {
        if (static_cast<long>(c.table_values.size()) != grid.cell_count()) {
            throw config_error("initial table size does not match the grid");
        }
        grid.u = c.table_values;
    } else {
        throw config_error("unknown initial data kind");
    }
    return grid;
}

inline json record_to_json(const CheckRecord& r) {
    json j;
    j["check"] = r.name;
    j["theorem"] = r.theorem;
    j["bound"] = r.bound;
    j["observed"] = r.observed;
    j["margin"] = r.margin;
    j["slack"] = r.slack;
    j["pass"] = r.pass;
    j["time"] = r.time;
    j["cell"] = r.cell;
    j["notes"] = r.notes;
    return j;
}

template <int N>
EstimateReport run_checks(const FlowTrace<N>& trace, const ExperimentConfig& c) {
    EstimateReport report;
    for (const CheckSpec& ck : c.checks) {
        if (ck.name == "gradient_bound") {
            report.records.push_back(gradient_bound_check(trace, ck.height_bound, ck.beta));
        } else if (ck.name == "curvature_lower_bound") {
            report.records.push_back(curvature_lower_bound_check(trace, ck.height_bound, ck.beta));
        } else if (ck.name == "speed_bound") {
            report.records.push_back(speed_bound_check(trace, ck.height_bound));
        } else if (ck.name == "enclosure") {
            Vec<N + 1> center;
            double radius = ck.radius;
            if (ck.center.empty()) {
                for (int a = 0; a <= N; ++a) center[a] = c.cap_center[static_cast<std::size_t>(a)];
                if (!(radius > 0.0)) radius = c.cap_radius;
            } else {
                for (int a = 0; a <= N; ++a) center[a] = ck.center[static_cast<std::size_t>(a)];
            }
            report.records.push_back(enclosure_check(trace, center, radius));
        }
    }
    return report;
}

// psi column parameters for the snapshot CSVs: first check supplying them,
// otherwise half the height cap.
inline std::pair<double, double> psi_params(const ExperimentConfig& c) {
    for (const CheckSpec& ck : c.checks) {
        if (ck.name == "gradient_bound" || ck.name == "curvature_lower_bound") {
            return {ck.height_bound, ck.beta};
        }
        if (ck.name == "speed_bound") return {ck.height_bound, 0.0};
    }
    if (std::isfinite(c.height_cap)) return {0.5 * c.height_cap, 0.0};
    return {std::numeric_limits<double>::quiet_NaN(), 0.0};
}

template <int N>
ExperimentResult run_experiment_nd(const ExperimentConfig& config,
                                   const std::filesystem::path& out_dir) {
    ExperimentResult result;
    json report;
    report["experiment"] = config.name;
    report["seed"] = config.seed;

    // Stage 1: Wulff certification.
    const ConvexityCertificate cert = convexity_certificate<N + 1>(config.desc, 10000);
    report["certification"] = {{"lambda_lo", cert.lambda_lo}, {"lambda_hi", cert.lambda_hi}};

    // Stage 2: the graph estimates assume the support function has
    // nonpositive Wulff height over downward normals; recenter when the
    // descriptor violates that and recentering is enabled.
    AnisotropyDescriptor desc = config.desc;
    const Vec<N + 1> e_up = Vec<N + 1>::Unit(N);
    double shift_margin = verify_shift_property<N + 1>(desc, Vec<N + 1>::Zero(), e_up, 20000);
    report["shift"] = {{"initial_margin", shift_margin}, {"recentered", false}};
    if (shift_margin > 1e-10 && config.recenter == "auto") {
        const Vec<N + 1> z0 = shift_point<N + 1>(desc, e_up, config.shift_t0);
        AnisotropyDescriptor::LinearTerm term;
        term.direction = Eigen::VectorXd(z0);
        term.amplitude = -1.0;
        desc = AnisotropyDescriptor::perturbed(desc, {term});
        shift_margin = verify_shift_property<N + 1>(desc, Vec<N + 1>::Zero(), e_up, 20000);
        report["shift"] = {{"initial_margin", report["shift"]["initial_margin"]},
                           {"recentered", true},
                           {"z0", std::vector<double>(z0.data(), z0.data() + z0.size())},
                           {"margin", shift_margin}};
    }

    // Stage 3: assemble the flow problem.
    std::optional<TranslatorProfile> translator;
    if (config.initial_kind == "translator") {
        double reach = 0.0;
        for (int a = 0; a < N; ++a) {
            const double lo = std::abs(config.grid_origin[static_cast<std::size_t>(a)]);
            const double hi = std::abs(config.grid_origin[static_cast<std::size_t>(a)] +
                                       config.grid_spacing * (config.grid_extents[static_cast<std::size_t>(a)] - 1));
            reach = std::max({reach, lo, hi});
        }
        translator = translator_profile(config.translator_alpha, config.translator_c, desc,
                                        reach * 1.02 + 8.0 * config.grid_spacing);
    }

    FlowConfig<N> flow;
    flow.alpha = config.alpha;
    flow.t_end = config.t_end;
    flow.cfl_safety = config.cfl_safety;
    flow.height_cap = config.height_cap;
    flow.snapshot_stride = config.snapshot_stride;
    flow.max_retries = config.max_retries;
    flow.dt_override = config.dt_override;
    flow.degeneracy_tol = config.degeneracy_tol;
    flow.boundary_policy = config.boundary == "exact_dirichlet" ? BoundaryPolicy::exact_dirichlet
                                                                : BoundaryPolicy::frozen_dirichlet;

    std::optional<QuadraticProfile<N>> profile;
    if (config.source) {
        profile = profile_from_spec<N>(*config.source);
        flow.source = manufactured_source<N>(*profile, desc, config.alpha, config.t_end);
    }
    if (flow.boundary_policy == BoundaryPolicy::exact_dirichlet) {
        if (config.initial_kind == "grim_reaper") {
            const double t0 = config.grim_t0;
            flow.boundary_values = [t0](const Vec<N>& x, double t) {
                return grim_reaper(x[0], t0 + t);
            };
        } else if (config.initial_kind == "translator") {
            const TranslatorProfile prof = *translator;
            flow.boundary_values = [prof](const Vec<N>& x, double t) {
                return prof.u_exact(x[0], t);
            };
        } else if (profile) {
            const QuadraticProfile<N> p = *profile;
            flow.boundary_values = [p](const Vec<N>& x, double t) { return p.value(x, t); };
        }
    }

    const GraphGrid<N> grid0 = build_initial_grid<N>(config, translator);
    validate_grid(grid0);

    // Stage 4: run the flow.
    const FlowTrace<N> trace = run(grid0, desc, flow);
    report["steps"] = trace.diagnostics.size();
    report["snapshots"] = trace.snapshots.size();
    report["final_time"] = trace.snapshots.back().time;
    report["flow_failed"] = trace.failed;
    if (trace.failed) report["flow_failure_reason"] = trace.failure_reason;

    // Stage 5: persist and check.
    const auto [psi_h, psi_b] = psi_params(config);
    persist_trace(out_dir, trace, emit_config(config), psi_h, psi_b);

    if (trace.failed) {
        result.exit_code = kExitNumericalFailure;
        result.message = "flow failed: " + trace.failure_reason;
        report["pass"] = false;
        result.report = report;
        std::ofstream os(out_dir / "report.json");
        os << report.dump(2) << '\n';
        return result;
    }

    const EstimateReport checks = run_checks(trace, config);
    json jchecks = json::array();
    for (const CheckRecord& r : checks.records) jchecks.push_back(record_to_json(r));
    report["checks"] = jchecks;
    report["pass"] = checks.all_pass();
    {
        std::ofstream os(out_dir / "report.json");
        os << report.dump(2) << '\n';
    }
    result.report = report;
    result.exit_code = checks.all_pass() ? kExitPass : kExitCheckFailure;
    if (!checks.all_pass()) result.message = "one or more estimate checks failed";
    return result;
}

}  // namespace detail

/// Full pipeline: certification, shift handling, flow run, checks, artifacts.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       std::string out_override = "") {
    const std::string out = !out_override.empty() ? out_override
                            : !config.out_dir.empty() ? config.out_dir
                                                      : std::string("out/") + config.name;
    try {
        if (config.dim == 1) return detail::run_experiment_nd<1>(config, out);
        return detail::run_experiment_nd<2>(config, out);
    } catch (const config_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const hypothesis_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const invalid_descriptor_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const not_uniformly_convex_error& e) {
        return {kExitConfigError, std::string("certification failed: ") + e.what(), {}};
    } catch (const invalid_argument_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const degenerate_window_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const not_enclosed_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const error& e) {
        return {kExitNumericalFailure, e.what(), {}};
    }
}

/// Re-run the checks recorded in a persisted trace directory.
inline ExperimentResult verify_trace_dir(const std::filesystem::path& trace_dir) {
    try {
        const ExperimentConfig config = parse_config_file(trace_dir / "config.json");
        json report;
        report["experiment"] = config.name;
        EstimateReport checks;
        if (config.dim == 1) {
            const FlowTrace<1> trace = load_trace<1>(trace_dir, config);
            if (trace.failed) return {kExitNumericalFailure, "trace is marked failed", {}};
            checks = detail::run_checks(trace, config);
        } else {
            const FlowTrace<2> trace = load_trace<2>(trace_dir, config);
            if (trace.failed) return {kExitNumericalFailure, "trace is marked failed", {}};
            checks = detail::run_checks(trace, config);
        }
        json jchecks = json::array();
        for (const CheckRecord& r : checks.records) jchecks.push_back(detail::record_to_json(r));
        report["checks"] = jchecks;
        report["pass"] = checks.all_pass();
        ExperimentResult result;
        result.report = report;
        result.exit_code = checks.all_pass() ? kExitPass : kExitCheckFailure;
        return result;
    } catch (const config_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const hypothesis_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const not_enclosed_error& e) {
        return {kExitConfigError, e.what(), {}};
    } catch (const error& e) {
        return {kExitNumericalFailure, e.what(), {}};
    }
}

struct SuiteEntry {
    std::string name;
    int exit_code = 0;
    bool pass = false;
    std::string message;
};

struct SuiteResult {
    std::vector<SuiteEntry> entries;
    int exit_code = 0;
    json summary;
};

/// Run every experiment listed in a matrix file; failures are isolated per
/// experiment and merged into a summary sorted by experiment name.
inline SuiteResult run_suite(const std::filesystem::path& matrix_path,
                             const std::filesystem::path& out_root) {
    SuiteResult suite;
    std::ifstream is(matrix_path);
    if (!is) {
        suite.exit_code = kExitConfigError;
        suite.entries.push_back({"<matrix>", kExitConfigError, false,
                                 "cannot open matrix file " + matrix_path.string()});
        return suite;
    }
    json jm;
    try {
        jm = json::parse(is);
        check_keys(jm, {"experiments"}, "matrix");
    } catch (const json::parse_error& e) {
        suite.exit_code = kExitConfigError;
        suite.entries.push_back({"<matrix>", kExitConfigError, false, e.what()});
        return suite;
    }

    for (const json& je : jm.value("experiments", json::array())) {
        SuiteEntry entry;
        try {
            check_keys(je, {"name", "config", "override"}, "matrix entry");
            const std::filesystem::path cfg_path =
                matrix_path.parent_path() / je.at("config").get<std::string>();
            std::ifstream cis(cfg_path);
            if (!cis) throw config_error("cannot open config " + cfg_path.string());
            json jc = json::parse(cis);
            if (je.contains("override")) jc.merge_patch(je.at("override"));
            ExperimentConfig config = parse_config(jc);
            if (je.contains("name")) config.name = je.at("name").get<std::string>();
            entry.name = config.name;
            const ExperimentResult res = run_experiment(config, (out_root / config.name).string());
            entry.exit_code = res.exit_code;
            entry.pass = res.exit_code == kExitPass;
            entry.message = res.message;
        } catch (const std::exception& e) {
            if (entry.name.empty()) entry.name = je.value("name", "<unnamed>");
            entry.exit_code = kExitConfigError;
            entry.pass = false;
            entry.message = e.what();
        }
        suite.entries.push_back(std::move(entry));
    }

    std::sort(suite.entries.begin(), suite.entries.end(),
              [](const SuiteEntry& a, const SuiteEntry& b) { return a.name < b.name; });
    json jsummary = json::array();
    for (const SuiteEntry& e : suite.entries) {
        jsummary.push_back({{"experiment", e.name},
                            {"exit_code", e.exit_code},
                            {"pass", e.pass},
                            {"message", e.message}});
        if (!e.pass) suite.exit_code = std::max(suite.exit_code, e.exit_code);
    }
    suite.summary = {{"experiments", jsummary}};
    if (!out_root.empty()) {
        std::filesystem::create_directories(out_root);
        std::ofstream os(out_root / "summary.json");
        os << suite.summary.dump(2) << '\n';
    }
    return suite;
}

}  // namespace gcf::io

#endif  // GCFLOW_EXPERIMENT_HPP
