#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gcflow/experiment.hpp"
#include "gcflow/gcflow.hpp"

using gcf::AnisotropyDescriptor;
using gcf::GraphGrid;
using gcf::Vec;
using gcf::io::json;
using Catch::Approx;

namespace fs = std::filesystem;

namespace {

json minimal_config() {
    return json{{"name", "minimal"},
                {"dim", 1},
                {"anisotropy", {{"family", "constant"}, {"parameters", {{"value", 1.0}}}}},
                {"grid", {{"origin", {-1.0}}, {"spacing", 0.05}, {"extents", {41}}}},
                {"initial", {{"kind", "paraboloid"}, {"coeff", 0.5}}},
                {"flow", {{"alpha", 1.0}, {"t_end", 0.01}}}};
}

json grim_config(const std::string& name) {
    json j = minimal_config();
    j["name"] = name;
    j["grid"] = {{"origin", {-1.2}}, {"spacing", 0.02}, {"extents", {121}}};
    j["initial"] = {{"kind", "grim_reaper"}, {"t0", 0.0}};
    j["flow"] = {{"alpha", 1.0}, {"t_end", 0.02}, {"boundary", "exact_dirichlet"},
                 {"snapshot_stride", 20}};
    j["checks"] = json::array({{{"name", "gradient_bound"}, {"N", 1.0}, {"beta", 1.0}},
                               {{"name", "curvature_lower_bound"}, {"N", 1.0}, {"beta", 1.0}},
                               {{"name", "speed_bound"}, {"N", 1.0}}});
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("io_test_out") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing") {
    SECTION("minimal config fills the defaults") {
        const auto c = gcf::io::parse_config(minimal_config());
        REQUIRE(c.cfl_safety == Approx(0.2));
        REQUIRE(c.snapshot_stride == 10);
        REQUIRE(c.max_retries == 10);
        REQUIRE(c.boundary == "frozen_dirichlet");
        REQUIRE(c.recenter == "auto");
        REQUIRE(c.checks.empty());
        REQUIRE(std::isinf(c.height_cap));
    }
    SECTION("N < beta violates the gradient-estimate hypothesis") {
        json j = minimal_config();
        j["checks"] = json::array({{{"name", "gradient_bound"}, {"N", 0.5}, {"beta", 1.0}}});
        try {
            gcf::io::parse_config(j);
            FAIL("expected config_error");
        } catch (const gcf::config_error& e) {
            REQUIRE(std::string(e.what()).find("N >= beta") != std::string::npos);
        }
    }
    SECTION("unknown keys are rejected by name") {
        json j = minimal_config();
        j["flow"]["cfl"] = 0.5;
        try {
            gcf::io::parse_config(j);
            FAIL("expected config_error");
        } catch (const gcf::config_error& e) {
            REQUIRE(std::string(e.what()).find("cfl") != std::string::npos);
        }
    }
    SECTION("emit(parse(x)) is a fixed point") {
        json j = grim_config("roundtrip");
        const auto c1 = gcf::io::parse_config(j);
        const json e1 = gcf::io::emit_config(c1);
        const auto c2 = gcf::io::parse_config(e1);
        const json e2 = gcf::io::emit_config(c2);
        REQUIRE(e1 == e2);
    }
    SECTION("exact boundary needs an oracle-backed profile") {
        json j = minimal_config();
        j["flow"]["boundary"] = "exact_dirichlet";
        REQUIRE_THROWS_AS(gcf::io::parse_config(j), gcf::config_error);
    }
}

TEST_CASE("descriptor serialization") {
    AnisotropyDescriptor::LinearTerm term;
    term.direction = Eigen::Vector2d(0.1, -0.2);
    term.amplitude = 0.5;
    const auto original = AnisotropyDescriptor::perturbed(
        AnisotropyDescriptor::ellipsoid(Eigen::Vector2d(1.0, 2.0)), {term});
    const json j = gcf::io::desc_to_json(original);
    const auto loaded = gcf::io::desc_from_json(j);
    // Same support function at a sample of directions.
    for (const Vec<2>& x : gcf::sphere_lattice<2>(64)) {
        REQUIRE(gcf::evaluate_support<2>(loaded, x) ==
                Approx(gcf::evaluate_support<2>(original, x)).epsilon(1e-15));
    }
    REQUIRE(gcf::io::desc_to_json(loaded) == j);
}

TEST_CASE("snapshot csv round trip") {
    GraphGrid<2> g(Vec<2>(-0.4, -0.4), 0.1, {9, 9});
    for (long c = 0; c < g.cell_count(); ++c) {
        g.u[static_cast<std::size_t>(c)] =
            0.5 * g.position(g.unlinear(c)).squaredNorm() + 1e-17;  // awkward decimals
    }
    g.active[3] = 0;
    g.time = 0.125;
    std::stringstream ss;
    gcf::io::write_snapshot_csv(ss, g, AnisotropyDescriptor::constant(1.0), 1.0, 1.0, 0.5);
    const GraphGrid<2> back =
        gcf::io::read_snapshot_csv<2>(ss, g.origin, g.spacing, g.extents, g.time);
    REQUIRE(back.active == g.active);
    for (long c = 0; c < g.cell_count(); ++c) {
        if (!g.active[static_cast<std::size_t>(c)]) continue;
        REQUIRE(back.u[static_cast<std::size_t>(c)] == g.u[static_cast<std::size_t>(c)]);
    }
}

TEST_CASE("experiments") {
    SECTION("grim reaper experiment passes end to end") {
        const fs::path out = fresh_dir("grim_e2e");
        const auto config = gcf::io::parse_config(grim_config("grim_e2e"));
        const auto result = gcf::io::run_experiment(config, out.string());
        REQUIRE(result.exit_code == gcf::io::kExitPass);
        REQUIRE(result.report["pass"].get<bool>());
        REQUIRE(fs::exists(out / "config.json"));
        REQUIRE(fs::exists(out / "report.json"));
        REQUIRE(fs::exists(out / "diagnostics.csv"));
        REQUIRE(fs::exists(out / "snapshots" / "index.csv"));
        for (const json& r : result.report["checks"]) {
            REQUIRE(r["pass"].get<bool>());
        }
    }
    SECTION("re-verifying the persisted trace reproduces the margins bitwise") {
        const fs::path out = fresh_dir("grim_verify");
        const auto config = gcf::io::parse_config(grim_config("grim_verify"));
        const auto result = gcf::io::run_experiment(config, out.string());
        REQUIRE(result.exit_code == gcf::io::kExitPass);
        const auto redo = gcf::io::verify_trace_dir(out);
        REQUIRE(redo.exit_code == gcf::io::kExitPass);
        REQUIRE(redo.report["checks"].size() == result.report["checks"].size());
        for (std::size_t k = 0; k < redo.report["checks"].size(); ++k) {
            const double m1 = result.report["checks"][k]["margin"].get<double>();
            const double m2 = redo.report["checks"][k]["margin"].get<double>();
            REQUIRE(m1 == m2);
        }
    }
    SECTION("a tampered trace fails verification with the check-failure code") {
        const fs::path out = fresh_dir("grim_tamper");
        const auto config = gcf::io::parse_config(grim_config("grim_tamper"));
        REQUIRE(gcf::io::run_experiment(config, out.string()).exit_code == 0);
        auto trace = gcf::io::load_trace<1>(out, config);
        // Flatten one interior cell of the final snapshot almost to
        // degeneracy; the persisted trace now violates the curvature floor.
        gcf::GraphGrid<1>& g = trace.snapshots.back();
        const long mid = g.cell_count() / 2;
        const double ul = g.u[static_cast<std::size_t>(mid - 1)];
        const double ur = g.u[static_cast<std::size_t>(mid + 1)];
        g.u[static_cast<std::size_t>(mid)] = 0.5 * (ul + ur) - 0.5e-3 * g.spacing * g.spacing;
        gcf::io::persist_trace(out, trace, gcf::io::emit_config(config), 1.0, 1.0);
        const auto redo = gcf::io::verify_trace_dir(out);
        REQUIRE(redo.exit_code == gcf::io::kExitCheckFailure);
        REQUIRE_FALSE(redo.report["pass"].get<bool>());
    }
    SECTION("non-convex descriptor exits with a configuration error") {
        json j = minimal_config();
        j["anisotropy"] = {{"family", "perturbed"},
                           {"parameters",
                            {{"base", {{"family", "constant"}, {"parameters", {{"value", 1.0}}}}},
                             {"terms", json::array({{{"direction", {0.0, 1.0}}, {"amplitude", 2.0}}})}}}};
        const auto config = gcf::io::parse_config(j);
        const auto result = gcf::io::run_experiment(config, fresh_dir("nonconvex").string());
        REQUIRE(result.exit_code == gcf::io::kExitConfigError);
    }
    SECTION("upward-shifted sphere gets recentered automatically") {
        json j = grim_config("recenter");
        j["anisotropy"] = {{"family", "shifted_sphere"},
                           {"parameters", {{"center", {0.0, 0.4}}, {"radius", 1.0}}}};
        j["checks"] = json::array();
        const auto config = gcf::io::parse_config(j);
        const auto result = gcf::io::run_experiment(config, fresh_dir("recenter").string());
        REQUIRE(result.exit_code == gcf::io::kExitPass);
        REQUIRE(result.report["shift"]["recentered"].get<bool>());
        REQUIRE(result.report["shift"]["margin"].get<double>() <= 1e-8);
    }
    SECTION("identical seeds give byte-identical artifacts") {
        const fs::path out1 = fresh_dir("det_a");
        const fs::path out2 = fresh_dir("det_b");
        const auto config = gcf::io::parse_config(grim_config("det"));
        REQUIRE(gcf::io::run_experiment(config, out1.string()).exit_code == 0);
        REQUIRE(gcf::io::run_experiment(config, out2.string()).exit_code == 0);
        REQUIRE(slurp(out1 / "diagnostics.csv") == slurp(out2 / "diagnostics.csv"));
        for (const auto& entry : fs::directory_iterator(out1 / "snapshots")) {
            const fs::path rel = entry.path().filename();
            REQUIRE(slurp(entry.path()) == slurp(out2 / "snapshots" / rel));
        }
    }
}

TEST_CASE("suites") {
    SECTION("empty matrix passes with an empty report") {
        const fs::path dir = fresh_dir("suite_empty");
        std::ofstream(dir / "matrix.json") << R"({"experiments": []})";
        const auto res = gcf::io::run_suite(dir / "matrix.json", dir / "out");
        REQUIRE(res.exit_code == 0);
        REQUIRE(res.entries.empty());
    }
    SECTION("one failing experiment among two is isolated") {
        const fs::path dir = fresh_dir("suite_mixed");
        std::ofstream(dir / "good.json") << grim_config("good").dump();
        json bad = grim_config("bad");
        bad["anisotropy"] = {{"family", "ellipsoid"}, {"parameters", {{"axes", {1.0, -2.0}}}}};
        std::ofstream(dir / "bad.json") << bad.dump();
        std::ofstream(dir / "matrix.json") << R"({"experiments": [
            {"name": "good", "config": "good.json"},
            {"name": "bad", "config": "bad.json"}
        ]})";
        const auto res = gcf::io::run_suite(dir / "matrix.json", dir / "out");
        REQUIRE(res.exit_code != 0);
        REQUIRE(res.entries.size() == 2);
        int failures = 0;
        for (const auto& e : res.entries) failures += e.pass ? 0 : 1;
        REQUIRE(failures == 1);
    }
    SECTION("overrides patch the base config") {
        const fs::path dir = fresh_dir("suite_override");
        std::ofstream(dir / "base.json") << grim_config("base").dump();
        std::ofstream(dir / "matrix.json") << R"({"experiments": [
            {"name": "patched", "config": "base.json",
             "override": {"flow": {"alpha": 2.0, "t_end": 0.01}}}
        ]})";
        const auto res = gcf::io::run_suite(dir / "matrix.json", dir / "out");
        REQUIRE(res.exit_code == 0);
        const auto cfg = gcf::io::parse_config_file(dir / "out" / "patched" / "config.json");
        REQUIRE(cfg.alpha == Approx(2.0));
    }
}
