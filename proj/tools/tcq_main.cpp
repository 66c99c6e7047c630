#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "tcq/errors.hpp"
#include "tcq/experiment.hpp"
#include "tcq/kvdoc.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    bool reproducible = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> rate_mode;
    std::optional<std::string> k_mode;
    std::optional<double> k_factor;
    std::optional<std::string> prune;
    std::optional<int> rice_g;
    std::optional<double> phi;
};

tcq::ExperimentConfig build_config(const CliOptions& cli) {
    tcq::ExperimentConfig cfg;
    if (!cli.config_path.empty()) cfg = tcq::config_from_kv(tcq::KvDoc::load(cli.config_path));

    // Command-line flags override file keys.
    if (cli.seed) cfg.seed = *cli.seed;
    if (cli.rate_mode) cfg.rate_mode = tcq::rate_mode_from_string(*cli.rate_mode);
    if (cli.k_mode) cfg.k_mode = tcq::k_mode_from_string(*cli.k_mode);
    if (cli.k_factor) cfg.k_factor = *cli.k_factor;
    if (cli.prune) {
        if (*cli.prune != "on" && *cli.prune != "off")
            throw tcq::config_error("--prune expects on|off");
        cfg.pruning = *cli.prune == "on";
    }
    if (cli.rice_g) cfg.rice_g = *cli.rice_g;
    if (cli.phi) cfg.phi = *cli.phi;
    cfg.validate();
    return cfg;
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw tcq::io_error("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tcq::io_error("cannot write " + path.string());
    out << text;
    if (!out) throw tcq::io_error("write failed for " + path.string());
}

int cmd_fit(const CliOptions& cli) {
    const tcq::ExperimentConfig cfg = build_config(cli);
    const auto fits = tcq::run_fit(cfg);
    const auto out = prepare_out_dir(cli.out_dir);
    tcq::fit_to_kv(fits).save(out / "fit.kv");
    for (const auto& f : fits)
        std::printf("fit qp %d: alpha=%.4f beta=%.4f gamma=%.4f epsilon=%.4f R2=%.4f rms=%.3f "
                    "(n=%zu)\n",
                    f.qp, f.report.params.alpha, f.report.params.beta, f.report.params.gamma,
                    f.report.params.epsilon, f.report.r_squared, f.report.residual_rms,
                    f.report.observations);
    std::printf("wrote %s\n", (out / "fit.kv").string().c_str());
    return kExitOk;
}

int cmd_bench(const CliOptions& cli) {
    const tcq::ExperimentConfig cfg = build_config(cli);
    const tcq::BenchReport report = tcq::run_bench(cfg);
    const auto out = prepare_out_dir(cli.out_dir);
    write_text(out / "bench.csv", tcq::bench_cells_csv(report, cli.reproducible));
    tcq::bench_to_kv(report, cli.reproducible).save(out / "bench.kv");
    for (const auto& c : report.cells)
        std::printf("bench qp %d sigma %g %dx%d: cost_delta=%+.5f%% branch_saving=%.2f%% "
                    "stages %llu -> %llu\n",
                    c.qp, c.sigma, c.shape.width, c.shape.height, 100.0 * c.rel_cost_delta,
                    100.0 * c.branch_saving, static_cast<unsigned long long>(c.full.stages),
                    static_cast<unsigned long long>(c.accel.stages));
    std::printf("wrote %s and %s\n", (out / "bench.csv").string().c_str(),
                (out / "bench.kv").string().c_str());
    return kExitOk;
}

int cmd_oracle(const CliOptions& cli) {
    const tcq::ExperimentConfig cfg = build_config(cli);
    const tcq::OracleOutcome outcome = tcq::run_oracle(cfg);
    const auto out = prepare_out_dir(cli.out_dir);
    tcq::oracle_to_kv(outcome).save(out / "oracle.kv");
    std::printf("oracle: %ld draws, %ld mismatches, worst rel err %.3e -> %s\n", outcome.draws,
                outcome.mismatches, outcome.worst_rel_err, outcome.pass() ? "pass" : "FAIL");
    if (!outcome.pass()) {
        std::printf("first counterexample:\n%s", outcome.first_counterexample.c_str());
        return kExitVerificationFailure;
    }
    return kExitOk;
}

int cmd_stats(const CliOptions& cli) {
    const tcq::ExperimentConfig cfg = build_config(cli);
    const tcq::StatsTable table = tcq::run_stats(cfg);
    const auto out = prepare_out_dir(cli.out_dir);
    write_text(out / "stats.csv", tcq::stats_csv(table));
    std::printf("stats: %zu rows, wrote %s\n", table.rows.size(),
                (out / "stats.csv").string().c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dependent-quantization laboratory: trellis-coded quantizer, rate/distortion "
                 "models, and low-complexity accelerations"};
    app.require_subcommand(1);

    CliOptions cli;
    app.add_option("--config", cli.config_path, "Config file (key = value document)");
    app.add_option("--out-dir", cli.out_dir, "Output directory (default .)");
    app.add_flag("--reproducible", cli.reproducible,
                 "Suppress timestamp and wall-clock fields so outputs are byte-stable");
    app.add_option("--seed", cli.seed, "Master seed");
    app.add_option("--rate-mode", cli.rate_mode, "SURROGATE or LINEAR_MODEL");
    app.add_option("--k-mode", cli.k_mode, "safe|risky|analytic|exact");
    app.add_option("--k-factor", cli.k_factor, "Explicit departure bound factor");
    app.add_option("--prune", cli.prune, "Branch pruning: on|off");
    app.add_option("--rice-g", cli.rice_g, "Golomb-Rice parameter (0..8)");
    app.add_option("--phi", cli.phi, "Lagrange factor: lambda = phi * q_step^2");

    auto* fit = app.add_subcommand("fit", "Fit the block rate model per QP");
    auto* bench = app.add_subcommand("bench", "Full vs accelerated search sweep");
    auto* oracle = app.add_subcommand("oracle", "Verify the search against brute force");
    auto* stats = app.add_subcommand("stats", "Closed-form statistics table");
    for (auto* sub : {fit, bench, oracle, stats}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (fit->parsed()) return cmd_fit(cli);
        if (bench->parsed()) return cmd_bench(cli);
        if (oracle->parsed()) return cmd_oracle(cli);
        if (stats->parsed()) return cmd_stats(cli);
        std::fprintf(stderr, "no subcommand\n");
        return kExitConfigError;
    } catch (const tcq::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIoError;
    } catch (const tcq::fit_error& e) {
        std::fprintf(stderr, "fit failure: %s\n", e.what());
        return kExitVerificationFailure;
    } catch (const tcq::size_error& e) {
        std::fprintf(stderr, "size guard: %s\n", e.what());
        return kExitConfigError;
    } catch (const tcq::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitVerificationFailure;
    }
}
