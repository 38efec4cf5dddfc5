#ifndef GCFLOW_IO_HPP
#define GCFLOW_IO_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcflow/anisotropy.hpp"
#include "gcflow/errors.hpp"
#include "gcflow/estimates.hpp"
#include "gcflow/geometry.hpp"
#include "gcflow/grid.hpp"
#include "gcflow/oracles.hpp"
#include "gcflow/solver.hpp"

namespace gcf::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form; identical doubles format identically,
/// which is what makes repeated runs byte-compare equal.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Snapshot CSV (schema: x1[,x2],u,upsilon,K,H,lambda_min,psi,speed)
// ---------------------------------------------------------------------------

template <int N>
void write_snapshot_csv(std::ostream& os, const GraphGrid<N>& grid,
                        const AnisotropyDescriptor& desc, double alpha, double psi_height,
                        double psi_beta) {
    if constexpr (N == 1) {
        os << "x1,u,upsilon,K,H,lambda_min,psi,speed\n";
    } else {
        os << "x1,x2,u,upsilon,K,H,lambda_min,psi,speed\n";
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (long c = 0; c < grid.cell_count(); ++c) {
        const Index<N> idx = grid.unlinear(c);
        if (!grid.is_active(idx)) continue;
        const Vec<N> x = grid.position(idx);
        double ups = nan, K = nan, H = nan, lam = nan, speed = nan;
        if (grid.is_interior(idx)) {
            try {
                const PointGeometry<N> geo = differentials(grid, idx);
                ups = geo.upsilon;
                K = geo.gauss;
                H = geo.mean;
                lam = geo.lambda_min;
                speed = speed_from_derivatives<N>(desc, alpha, geo.Du, geo.D2u, c, grid.time);
            } catch (const convexity_loss_error&) {
                // leave the derived columns empty for degenerate cells
            }
        }
        const double u = grid.u[static_cast<std::size_t>(c)];
        const double psi = std::isfinite(psi_height)
                               ? std::max(psi_height - psi_beta * grid.time - u, 0.0)
                               : nan;
        for (int a = 0; a < N; ++a) os << format_double(x[a]) << ',';
        os << format_double(u) << ',' << format_double(ups) << ',' << format_double(K) << ','
           << format_double(H) << ',' << format_double(lam) << ',' << format_double(psi) << ','
           << format_double(speed) << '\n';
    }
}

template <int N>
GraphGrid<N> read_snapshot_csv(std::istream& is, const Vec<N>& origin, double spacing,
                               const Index<N>& extents, double time) {
    GraphGrid<N> grid(origin, spacing, extents);
    grid.time = time;
    std::fill(grid.active.begin(), grid.active.end(), 0);
    std::string line;
    if (!std::getline(is, line)) throw config_error("snapshot csv: missing header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cellstr;
        std::vector<double> vals;
        while (std::getline(row, cellstr, ',')) vals.push_back(std::strtod(cellstr.c_str(), nullptr));
        if (vals.size() < static_cast<std::size_t>(N) + 1) {
            throw config_error("snapshot csv: malformed row");
        }
        Index<N> idx;
        for (int a = 0; a < N; ++a) {
            idx[a] = static_cast<int>(std::lround((vals[static_cast<std::size_t>(a)] - origin[a]) / spacing));
        }
        if (!grid.in_bounds(idx)) throw config_error("snapshot csv: row outside grid");
        const long c = grid.linear(idx);
        grid.u[static_cast<std::size_t>(c)] = vals[static_cast<std::size_t>(N)];
        grid.active[static_cast<std::size_t>(c)] = 1;
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Anisotropy descriptor <-> JSON
// ---------------------------------------------------------------------------

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw config_error(where + ": unknown key '" + item.key() + "'");
        }
    }
}

inline json desc_to_json(const AnisotropyDescriptor& d) {
    using Family = AnisotropyDescriptor::Family;
    json j;
    json params;
    switch (d.family) {
        case Family::constant:
            j["family"] = "constant";
            params["value"] = d.value;
            break;
        case Family::shifted_sphere:
            j["family"] = "shifted_sphere";
            params["center"] = std::vector<double>(d.center.data(), d.center.data() + d.center.size());
            params["radius"] = d.radius;
            break;
        case Family::ellipsoid:
            j["family"] = "ellipsoid";
            params["axes"] = std::vector<double>(d.axes.data(), d.axes.data() + d.axes.size());
            break;
        case Family::perturbed: {
            j["family"] = "perturbed";
            params["base"] = desc_to_json(*d.base);
            json terms = json::array();
            for (const auto& t : d.terms) {
                json jt;
                jt["direction"] =
                    std::vector<double>(t.direction.data(), t.direction.data() + t.direction.size());
                jt["amplitude"] = t.amplitude;
                terms.push_back(jt);
            }
            params["terms"] = terms;
            break;
        }
    }
    j["parameters"] = params;
    j["fd_step"] = d.fd_step;
    if (d.numeric_derivatives) j["numeric_derivatives"] = true;
    return j;
}

inline Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw config_error(where + ": expected an array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

inline AnisotropyDescriptor desc_from_json(const json& j) {
    check_keys(j, {"family", "parameters", "fd_step", "numeric_derivatives"}, "anisotropy");
    if (!j.contains("family")) throw config_error("anisotropy: missing 'family'");
    const std::string family = j.at("family").get<std::string>();
    const json params = j.value("parameters", json::object());
    AnisotropyDescriptor d;
    if (family == "constant") {
        check_keys(params, {"value"}, "anisotropy.parameters");
        d = AnisotropyDescriptor::constant(params.value("value", 1.0));
    } else if (family == "shifted_sphere") {
        check_keys(params, {"center", "radius"}, "anisotropy.parameters");
        if (!params.contains("center")) throw config_error("shifted_sphere: missing 'center'");
        d = AnisotropyDescriptor::shifted_sphere(vector_from_json(params.at("center"), "center"),
                                                 params.value("radius", 1.0));
    } else if (family == "ellipsoid") {
        check_keys(params, {"axes"}, "anisotropy.parameters");
        if (!params.contains("axes")) throw config_error("ellipsoid: missing 'axes'");
        d = AnisotropyDescriptor::ellipsoid(vector_from_json(params.at("axes"), "axes"));
    } else if (family == "perturbed") {
        check_keys(params, {"base", "terms"}, "anisotropy.parameters");
        if (!params.contains("base")) throw config_error("perturbed: missing 'base'");
        std::vector<AnisotropyDescriptor::LinearTerm> terms;
        for (const json& jt : params.value("terms", json::array())) {
            check_keys(jt, {"direction", "amplitude"}, "perturbed term");
            AnisotropyDescriptor::LinearTerm t;
            t.direction = vector_from_json(jt.at("direction"), "term direction");
            t.amplitude = jt.value("amplitude", 0.0);
            terms.push_back(std::move(t));
        }
        d = AnisotropyDescriptor::perturbed(desc_from_json(params.at("base")), std::move(terms));
    } else {
        throw config_error("anisotropy: unknown family '" + family + "'");
    }
    d.fd_step = j.value("fd_step", 1e-5);
    d.numeric_derivatives = j.value("numeric_derivatives", false);
    return d;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct CheckSpec {
    std::string name;  // gradient_bound | curvature_lower_bound | speed_bound | enclosure
    double height_bound = 0.0;
    double beta = 0.0;
    double radius = 0.0;
    std::vector<double> center;
};

struct SourceSpec {
    // Space-time profile u = q0(x) + t q1(x) + t^2 q2(x); the forcing is
    // manufactured so this profile solves the forced flow exactly.
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    std::vector<double> b0, b1, b2;
    std::vector<double> A0, A1, A2;  // row-major n x n, empty means zero
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string name = "experiment";
    int dim = 1;

    AnisotropyDescriptor desc;

    std::vector<double> grid_origin;
    double grid_spacing = 0.0;
    std::vector<int> grid_extents;

    std::string initial_kind;  // paraboloid | grim_reaper | translator | table | sphere_cap
    double paraboloid_coeff = 0.5;
    double grim_t0 = 0.0;
    double translator_alpha = 1.0;
    double translator_c = 1.0;
    std::vector<double> table_values;
    double cap_radius = 1.0;
    std::vector<double> cap_center;

    double alpha = 1.0;
    double t_end = 0.0;
    double cfl_safety = 0.2;
    double height_cap = std::numeric_limits<double>::infinity();
    std::string boundary = "frozen_dirichlet";
    int snapshot_stride = 10;
    int max_retries = 10;
    double dt_override = 0.0;
    double degeneracy_tol = 1e-9;
    std::optional<SourceSpec> source;

    std::string recenter = "auto";  // auto | none
    double shift_t0 = 0.5;

    std::vector<CheckSpec> checks;

    std::string out_dir;
    long seed = 0;
};

inline void validate_config(const ExperimentConfig& c) {
    if (c.schema_version != 1) throw config_error("config: unsupported schema version");
    if (c.dim != 1 && c.dim != 2) throw config_error("config: dim must be 1 or 2");
    if (c.grid_origin.size() != static_cast<std::size_t>(c.dim)) {
        throw config_error("config: grid.origin must have dim entries");
    }
    if (c.grid_extents.size() != static_cast<std::size_t>(c.dim)) {
        throw config_error("config: grid.extents must have dim entries");
    }
    for (int e : c.grid_extents) {
        if (e < 5) throw config_error("config: grid extents must be at least 5 cells");
    }
    if (!(c.grid_spacing > 0.0)) throw config_error("config: grid.spacing must be positive");
    if (!(c.t_end > 0.0)) throw config_error("config: flow.t_end must be positive");
    if (!(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0)) {
        throw config_error("config: flow.cfl_safety must lie in (0, 1]");
    }
    if (c.snapshot_stride < 1) throw config_error("config: flow.snapshot_stride must be >= 1");
    if (c.max_retries < 0) throw config_error("config: flow.max_retries must be >= 0");
    if (!(c.alpha > 0.0)) throw config_error("config: flow.alpha must be positive");
    if (c.boundary != "frozen_dirichlet" && c.boundary != "exact_dirichlet") {
        throw config_error("config: flow.boundary must be frozen_dirichlet or exact_dirichlet");
    }
    if (c.recenter != "auto" && c.recenter != "none") {
        throw config_error("config: anisotropy recenter must be auto or none");
    }
    if (!(c.shift_t0 > 0.0 && c.shift_t0 < 1.0)) {
        throw config_error("config: shift t0 must lie in (0,1)");
    }

    const std::set<std::string> kinds{"paraboloid", "grim_reaper", "translator", "table",
                                      "sphere_cap"};
    if (!kinds.count(c.initial_kind)) {
        throw config_error("config: unknown initial data kind '" + c.initial_kind + "'");
    }
    if ((c.initial_kind == "grim_reaper" || c.initial_kind == "translator") && c.dim != 1) {
        throw config_error("config: " + c.initial_kind + " initial data requires dim = 1");
    }
    if (c.initial_kind == "sphere_cap" &&
        c.cap_center.size() != static_cast<std::size_t>(c.dim) + 1) {
        throw config_error("config: sphere_cap center must have dim+1 entries");
    }
    if (c.boundary == "exact_dirichlet" && c.initial_kind != "grim_reaper" &&
        c.initial_kind != "translator" && !c.source) {
        throw config_error(
            "config: exact_dirichlet boundary needs an oracle-backed initial profile "
            "(grim_reaper, translator) or a manufactured source");
    }
    if (c.source) {
        const std::size_t n = static_cast<std::size_t>(c.dim);
        if (c.source->b0.size() != n || c.source->b1.size() != n ||
            c.source->A0.size() != n * n || c.source->A1.size() != n * n) {
            throw config_error("config: source profile coefficient sizes must match dim");
        }
        if ((!c.source->b2.empty() && c.source->b2.size() != n) ||
            (!c.source->A2.empty() && c.source->A2.size() != n * n)) {
            throw config_error("config: source profile t^2 coefficient sizes must match dim");
        }
    }

    for (const CheckSpec& ck : c.checks) {
        if (ck.name == "gradient_bound" || ck.name == "curvature_lower_bound") {
            if (!(ck.beta > 0.0) || !(ck.height_bound >= ck.beta)) {
                throw config_error("config: check '" + ck.name +
                                   "' violates the gradient-estimate hypothesis N >= beta > 0");
            }
        } else if (ck.name == "speed_bound") {
            if (!(ck.height_bound > 0.0)) {
                throw config_error("config: speed_bound requires N > 0");
            }
        } else if (ck.name == "enclosure") {
            if (!(ck.radius > 0.0)) throw config_error("config: enclosure requires R > 0");
            if (!ck.center.empty() && ck.center.size() != static_cast<std::size_t>(c.dim) + 1) {
                throw config_error("config: enclosure center must have dim+1 entries");
            }
            if (ck.center.empty() && c.initial_kind != "sphere_cap") {
                throw config_error("config: enclosure without a center requires sphere_cap initial data");
            }
        } else {
            throw config_error("config: unknown check '" + ck.name + "'");
        }
    }
}

inline ExperimentConfig parse_config(const json& j) {
    check_keys(j,
               {"schema_version", "name", "dim", "anisotropy", "grid", "initial", "flow", "checks",
                "output", "seed", "shift"},
               "config");
    ExperimentConfig c;
    c.schema_version = j.value("schema_version", 1);
    c.name = j.value("name", "experiment");
    c.dim = j.value("dim", 1);
    if (!j.contains("anisotropy")) throw config_error("config: missing 'anisotropy'");
    c.desc = desc_from_json(j.at("anisotropy"));

    if (!j.contains("grid")) throw config_error("config: missing 'grid'");
    const json& jg = j.at("grid");
    check_keys(jg, {"origin", "spacing", "extents"}, "grid");
    c.grid_origin = jg.value("origin", std::vector<double>{});
    c.grid_spacing = jg.value("spacing", 0.0);
    c.grid_extents = jg.value("extents", std::vector<int>{});

    if (!j.contains("initial")) throw config_error("config: missing 'initial'");
    const json& ji = j.at("initial");
    check_keys(ji, {"kind", "coeff", "t0", "alpha", "c", "values", "radius", "center"}, "initial");
    c.initial_kind = ji.value("kind", "");
    c.paraboloid_coeff = ji.value("coeff", 0.5);
    c.grim_t0 = ji.value("t0", 0.0);
    c.translator_alpha = ji.value("alpha", 1.0);
    c.translator_c = ji.value("c", 1.0);
    c.table_values = ji.value("values", std::vector<double>{});
    c.cap_radius = ji.value("radius", 1.0);
    c.cap_center = ji.value("center", std::vector<double>{});

    if (!j.contains("flow")) throw config_error("config: missing 'flow'");
    const json& jf = j.at("flow");
    check_keys(jf,
               {"alpha", "t_end", "cfl_safety", "height_cap", "boundary", "snapshot_stride",
                "max_retries", "dt_override", "degeneracy_tol", "source"},
               "flow");
    c.alpha = jf.value("alpha", 1.0);
    c.t_end = jf.value("t_end", 0.0);
    c.cfl_safety = jf.value("cfl_safety", 0.2);
    c.height_cap = jf.value("height_cap", std::numeric_limits<double>::infinity());
    c.boundary = jf.value("boundary", "frozen_dirichlet");
    c.snapshot_stride = jf.value("snapshot_stride", 10);
    c.max_retries = jf.value("max_retries", 10);
    c.dt_override = jf.value("dt_override", 0.0);
    c.degeneracy_tol = jf.value("degeneracy_tol", 1e-9);
    if (jf.contains("source")) {
        const json& js = jf.at("source");
        check_keys(js, {"kind", "profile"}, "flow.source");
        if (js.value("kind", "") != "manufactured") {
            throw config_error("config: flow.source.kind must be 'manufactured'");
        }
        const json& jp = js.value("profile", json::object());
        check_keys(jp, {"c0", "b0", "A0", "c1", "b1", "A1", "c2", "b2", "A2"},
                   "flow.source.profile");
        SourceSpec s;
        s.c0 = jp.value("c0", 0.0);
        s.c1 = jp.value("c1", 0.0);
        s.c2 = jp.value("c2", 0.0);
        s.b0 = jp.value("b0", std::vector<double>{});
        s.b1 = jp.value("b1", std::vector<double>{});
        s.b2 = jp.value("b2", std::vector<double>{});
        s.A0 = jp.value("A0", std::vector<double>{});
        s.A1 = jp.value("A1", std::vector<double>{});
        s.A2 = jp.value("A2", std::vector<double>{});
        c.source = s;
    }

    if (j.contains("shift")) {
        const json& jsft = j.at("shift");
        check_keys(jsft, {"recenter", "t0"}, "shift");
        c.recenter = jsft.value("recenter", "auto");
        c.shift_t0 = jsft.value("t0", 0.5);
    }

    for (const json& jc : j.value("checks", json::array())) {
        check_keys(jc, {"name", "N", "beta", "R", "center"}, "check");
        CheckSpec ck;
        ck.name = jc.value("name", "");
        ck.height_bound = jc.value("N", 0.0);
        ck.beta = jc.value("beta", 0.0);
        ck.radius = jc.value("R", 0.0);
        ck.center = jc.value("center", std::vector<double>{});
        c.checks.push_back(std::move(ck));
    }

    if (j.contains("output")) {
        const json& jo = j.at("output");
        check_keys(jo, {"dir"}, "output");
        c.out_dir = jo.value("dir", "");
    }
    c.seed = j.value("seed", 0L);

    validate_config(c);
    return c;
}

inline ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw config_error("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw config_error("config: " + std::string(e.what()));
    }
    return parse_config(j);
}

inline json emit_config(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["name"] = c.name;
    j["dim"] = c.dim;
    j["anisotropy"] = desc_to_json(c.desc);
    j["grid"] = {{"origin", c.grid_origin}, {"spacing", c.grid_spacing}, {"extents", c.grid_extents}};
    json ji;
    ji["kind"] = c.initial_kind;
    if (c.initial_kind == "paraboloid") ji["coeff"] = c.paraboloid_coeff;
    if (c.initial_kind == "grim_reaper") ji["t0"] = c.grim_t0;
    if (c.initial_kind == "translator") {
        ji["alpha"] = c.translator_alpha;
        ji["c"] = c.translator_c;
    }
    if (c.initial_kind == "table") ji["values"] = c.table_values;
    if (c.initial_kind == "sphere_cap") {
        ji["radius"] = c.cap_radius;
        ji["center"] = c.cap_center;
    }
    j["initial"] = ji;
    json jf;
    jf["alpha"] = c.alpha;
    jf["t_end"] = c.t_end;
    jf["cfl_safety"] = c.cfl_safety;
    if (std::isfinite(c.height_cap)) jf["height_cap"] = c.height_cap;
    jf["boundary"] = c.boundary;
    jf["snapshot_stride"] = c.snapshot_stride;
    jf["max_retries"] = c.max_retries;
    if (c.dt_override > 0.0) jf["dt_override"] = c.dt_override;
    jf["degeneracy_tol"] = c.degeneracy_tol;
    if (c.source) {
        json profile = {{"c0", c.source->c0}, {"b0", c.source->b0}, {"A0", c.source->A0},
                        {"c1", c.source->c1}, {"b1", c.source->b1}, {"A1", c.source->A1}};
        if (c.source->c2 != 0.0 || !c.source->b2.empty() || !c.source->A2.empty()) {
            profile["c2"] = c.source->c2;
            profile["b2"] = c.source->b2;
            profile["A2"] = c.source->A2;
        }
        jf["source"] = {{"kind", "manufactured"}, {"profile", profile}};
    }
    j["flow"] = jf;
    j["shift"] = {{"recenter", c.recenter}, {"t0", c.shift_t0}};
    json checks = json::array();
    for (const CheckSpec& ck : c.checks) {
        json jc;
        jc["name"] = ck.name;
        if (ck.name == "enclosure") {
            jc["R"] = ck.radius;
            if (!ck.center.empty()) jc["center"] = ck.center;
        } else {
            jc["N"] = ck.height_bound;
            if (ck.name != "speed_bound") jc["beta"] = ck.beta;
        }
        checks.push_back(jc);
    }
    j["checks"] = checks;
    if (!c.out_dir.empty()) j["output"] = {{"dir", c.out_dir}};
    j["seed"] = c.seed;
    return j;
}

// ---------------------------------------------------------------------------
// Trace persistence
// ---------------------------------------------------------------------------

template <int N>
void persist_trace(const std::filesystem::path& dir, const FlowTrace<N>& trace,
                   const json& config_echo, double psi_height, double psi_beta) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "snapshots");
    {
        std::ofstream os(dir / "config.json");
        os << config_echo.dump(2) << '\n';
    }
    {
        std::ofstream index(dir / "snapshots" / "index.csv");
        index << "k,t,file\n";
        for (std::size_t k = 0; k < trace.snapshots.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof(name), "snap_%06zu.csv", k);
            index << k << ',' << format_double(trace.snapshots[k].time) << ',' << name << '\n';
            std::ofstream snap(dir / "snapshots" / name);
            write_snapshot_csv(snap, trace.snapshots[k], trace.desc, trace.config.alpha,
                               psi_height, psi_beta);
        }
    }
    {
        std::ofstream diag(dir / "diagnostics.csv");
        diag << "t,dt,max_speed,min_lambda_min,retries\n";
        for (const StepDiagnostics& d : trace.diagnostics) {
            diag << format_double(d.t) << ',' << format_double(d.dt) << ','
                 << format_double(d.max_speed) << ',' << format_double(d.min_lambda_min) << ','
                 << d.retries << '\n';
        }
    }
    if (trace.failed) {
        std::ofstream fail(dir / "FAILED");
        fail << trace.failure_reason << '\n';
    }
}

template <int N>
FlowTrace<N> load_trace(const std::filesystem::path& dir, const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    FlowTrace<N> trace;
    trace.desc = config.desc;
    trace.config.alpha = config.alpha;
    trace.config.t_end = config.t_end;
    trace.config.cfl_safety = config.cfl_safety;
    trace.config.height_cap = config.height_cap;
    trace.config.snapshot_stride = config.snapshot_stride;
    trace.config.max_retries = config.max_retries;
    trace.config.degeneracy_tol = config.degeneracy_tol;

    Vec<N> origin;
    Index<N> extents;
    for (int a = 0; a < N; ++a) {
        origin[a] = config.grid_origin[static_cast<std::size_t>(a)];
        extents[a] = config.grid_extents[static_cast<std::size_t>(a)];
    }

    std::ifstream index(dir / "snapshots" / "index.csv");
    if (!index) throw config_error("trace: missing snapshots/index.csv in " + dir.string());
    std::string line;
    std::getline(index, line);  // header
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string kstr, tstr, fname;
        std::getline(row, kstr, ',');
        std::getline(row, tstr, ',');
        std::getline(row, fname);
        const double t = std::strtod(tstr.c_str(), nullptr);
        std::ifstream snap(dir / "snapshots" / fname);
        if (!snap) throw config_error("trace: missing snapshot file " + fname);
        trace.snapshots.push_back(
            read_snapshot_csv<N>(snap, origin, config.grid_spacing, extents, t));
    }
    trace.failed = fs::exists(dir / "FAILED");
    return trace;
}

}  // namespace gcf::io

#endif  // GCFLOW_IO_HPP
