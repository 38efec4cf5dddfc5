// Command-line front end: certify Wulff descriptors, run flow experiments,
// re-verify estimate checks on persisted traces, emit oracle profiles, and
// drive experiment matrices.
//
// Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 numerical
// failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "gcflow/gcflow.hpp"

namespace {

using gcf::io::ExperimentConfig;
using gcf::io::json;

void print_report(const json& report) {
    if (report.contains("certification")) {
        std::cout << "certification: lambda_lo=" << report["certification"]["lambda_lo"]
                  << " lambda_hi=" << report["certification"]["lambda_hi"] << "\n";
    }
    if (report.contains("checks")) {
        for (const json& r : report["checks"]) {
            std::cout << (r["pass"].get<bool>() ? "[PASS] " : "[FAIL] ") << r["check"].get<std::string>()
                      << ": bound=" << r["bound"] << " observed=" << r["observed"]
                      << " margin=" << r["margin"] << "\n";
        }
    }
    if (report.contains("pass")) {
        std::cout << (report["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
    }
}

template <int M>
int wulff_command_nd(const ExperimentConfig& config, int samples, double t0, long seed) {
    using gcf::Vec;
    const gcf::ConvexityCertificate cert =
        gcf::convexity_certificate<M>(config.desc, samples);
    std::cout << "certificate: lambda_lo=" << cert.lambda_lo << " lambda_hi=" << cert.lambda_hi
              << "\n";

    const Vec<M> e_up = Vec<M>::Unit(M - 1);
    const Vec<M> z0 = gcf::shift_point<M>(config.desc, e_up, t0, samples);
    const double margin =
        gcf::verify_shift_property<M>(config.desc, z0, e_up, 10 * samples);
    std::cout << "shift point: z0=[";
    for (int a = 0; a < M; ++a) std::cout << (a ? "," : "") << z0[a];
    std::cout << "] margin=" << margin << "\n";

    // Seeded spot check of the support inequality <W(x'), x> <= f(x).
    std::mt19937 rng(static_cast<unsigned>(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = -1e300;
    for (int k = 0; k < 200; ++k) {
        Vec<M> x, y;
        for (int a = 0; a < M; ++a) {
            x[a] = gauss(rng);
            y[a] = gauss(rng);
        }
        x.normalize();
        y.normalize();
        worst = std::max(worst, gcf::wulff_point<M>(config.desc, y).dot(x) -
                                    gcf::evaluate_support<M>(config.desc, x));
    }
    std::cout << "support inequality worst violation: " << worst << "\n";

    if (margin > 1e-8) {
        std::cout << "shift property FAILED\n";
        return gcf::io::kExitNumericalFailure;
    }
    return gcf::io::kExitPass;
}

int wulff_command(const std::string& config_path, int samples, double t0, long seed) {
    const ExperimentConfig config = gcf::io::parse_config_file(config_path);
    if (config.dim == 1) return wulff_command_nd<2>(config, samples, t0, seed);
    return wulff_command_nd<3>(config, samples, t0, seed);
}

template <int N>
int oracle_command_nd(const ExperimentConfig& config, const std::filesystem::path& out) {
    gcf::GraphGrid<N> grid = gcf::io::detail::build_initial_grid<N>(
        config, config.initial_kind == "translator"
                    ? std::optional<gcf::TranslatorProfile>(gcf::translator_profile(
                          config.translator_alpha, config.translator_c, config.desc,
                          std::abs(config.grid_origin[0]) +
                              config.grid_spacing * config.grid_extents[0]))
                    : std::nullopt);
    std::filesystem::create_directories(out);
    std::ofstream os(out / "oracle.csv");
    gcf::io::write_snapshot_csv(os, grid, config.desc, config.alpha,
                                std::numeric_limits<double>::quiet_NaN(), 0.0);
    std::cout << "wrote " << (out / "oracle.csv").string() << "\n";
    return gcf::io::kExitPass;
}

int handle_errors(const std::function<int()>& body) {
    try {
        return body();
    } catch (const gcf::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return gcf::io::kExitConfigError;
    } catch (const gcf::hypothesis_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return gcf::io::kExitConfigError;
    } catch (const gcf::invalid_descriptor_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return gcf::io::kExitConfigError;
    } catch (const gcf::not_uniformly_convex_error& e) {
        std::cerr << "certification failed: " << e.what() << "\n";
        return gcf::io::kExitConfigError;
    } catch (const gcf::error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return gcf::io::kExitNumericalFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisotropic Gauss curvature flow of convex graphs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, trace_dir, matrix_path;
    long seed = 0;
    int samples = 10000;
    double t0 = 0.5;

    CLI::App* wulff = app.add_subcommand("wulff", "certify a descriptor and compute/verify its shift point");
    wulff->add_option("--config", config_path, "experiment config")->required();
    wulff->add_option("--samples", samples, "sphere sample count");
    wulff->add_option("--t0", t0, "interpolation parameter of the shift point");
    wulff->add_option("--seed", seed, "seed for the random spot checks");

    CLI::App* run = app.add_subcommand("run", "run a single experiment");
    run->add_option("--config", config_path, "experiment config")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the config seed");

    CLI::App* verify = app.add_subcommand("verify", "re-run estimate checks on a persisted trace");
    verify->add_option("--trace", trace_dir, "trace directory")->required();

    CLI::App* oracle = app.add_subcommand("oracle", "emit an oracle profile as a snapshot CSV");
    oracle->add_option("--config", config_path, "experiment config")->required();
    oracle->add_option("--out", out_dir, "output directory")->required();

    CLI::App* suite = app.add_subcommand("suite", "run an experiment matrix");
    suite->add_option("--matrix", matrix_path, "matrix file")->required();
    suite->add_option("--out", out_dir, "output root directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (wulff->parsed()) {
        return handle_errors([&] { return wulff_command(config_path, samples, t0, seed); });
    }
    if (run->parsed()) {
        return handle_errors([&] {
            ExperimentConfig config = gcf::io::parse_config_file(config_path);
            if (run->count("--seed")) config.seed = seed;
            const gcf::io::ExperimentResult res = gcf::io::run_experiment(config, out_dir);
            if (!res.message.empty()) std::cerr << res.message << "\n";
            print_report(res.report);
            return res.exit_code;
        });
    }
    if (verify->parsed()) {
        return handle_errors([&] {
            const gcf::io::ExperimentResult res = gcf::io::verify_trace_dir(trace_dir);
            if (!res.message.empty()) std::cerr << res.message << "\n";
            print_report(res.report);
            return res.exit_code;
        });
    }
    if (oracle->parsed()) {
        return handle_errors([&] {
            const ExperimentConfig config = gcf::io::parse_config_file(config_path);
            if (config.dim == 1) return oracle_command_nd<1>(config, out_dir);
            return oracle_command_nd<2>(config, out_dir);
        });
    }
    if (suite->parsed()) {
        return handle_errors([&] {
            const gcf::io::SuiteResult res = gcf::io::run_suite(matrix_path, out_dir);
            for (const auto& e : res.entries) {
                std::cout << (e.pass ? "[PASS] " : "[FAIL] ") << e.name;
                if (!e.message.empty()) std::cout << " (" << e.message << ")";
                std::cout << "\n";
            }
            std::cout << res.entries.size() << " experiments, exit " << res.exit_code << "\n";
            return res.exit_code;
        });
    }
    return gcf::io::kExitConfigError;
}
