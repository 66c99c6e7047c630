#include "tcq/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "tcq/errors.hpp"
#include "tcq/prng.hpp"
#include "tcq/quadrature.hpp"

namespace tcq {

namespace {

// Seed stream purposes, so fit, bench and oracle draws never overlap.
constexpr std::uint64_t kSeedFit = 0xF17;
constexpr std::uint64_t kSeedBench = 0xBE;
constexpr std::uint64_t kSeedOracle = 0x0AC1E;

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t cell,
                         std::uint64_t block) {
    return derive_seed(derive_seed(derive_seed(seed, purpose), cell), block);
}

std::string shape_str(const BlockShape& s) {
    return std::to_string(s.width) + "x" + std::to_string(s.height);
}

BlockShape shape_from_str(const std::string& s) {
    const std::size_t x = s.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= s.size())
        throw config_error("bad block shape '" + s + "', expected WxH");
    BlockShape shape;
    shape.width = std::stoi(s.substr(0, x));
    shape.height = std::stoi(s.substr(x + 1));
    return shape;
}

double median_of(std::vector<int> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return static_cast<double>(values[n / 2]);
    return 0.5 * (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2]));
}

const RateModelParams* params_for(const std::vector<FitCell>& fits, int qp) {
    for (const auto& cell : fits)
        if (cell.qp == qp) return &cell.report.params;
    return nullptr;
}

} // namespace

std::string to_string(KMode mode) {
    switch (mode) {
        case KMode::kSafe: return "safe";
        case KMode::kRisky: return "risky";
        case KMode::kAnalytic: return "analytic";
        case KMode::kExact: return "exact";
    }
    return "?";
}

std::string to_string(RateMode mode) {
    return mode == RateMode::kSurrogate ? "SURROGATE" : "LINEAR_MODEL";
}

KMode k_mode_from_string(const std::string& s) {
    if (s == "safe") return KMode::kSafe;
    if (s == "risky") return KMode::kRisky;
    if (s == "analytic") return KMode::kAnalytic;
    if (s == "exact") return KMode::kExact;
    throw config_error("unknown k_mode '" + s + "' (safe|risky|analytic|exact)");
}

RateMode rate_mode_from_string(const std::string& s) {
    if (s == "SURROGATE") return RateMode::kSurrogate;
    if (s == "LINEAR_MODEL") return RateMode::kLinearModel;
    throw config_error("unknown rate_mode '" + s + "' (SURROGATE|LINEAR_MODEL)");
}

void ExperimentConfig::validate() const {
    if (qp_list.empty()) throw config_error("qp_list must not be empty");
    if (sigma_list.empty()) throw config_error("sigma_list must not be empty");
    if (block_shapes.empty()) throw config_error("block_shapes must not be empty");
    if (blocks_per_cell < 1) throw config_error("blocks_per_cell must be >= 1");
    for (const double s : sigma_list)
        if (!(s > 0.0)) throw config_error("sigma values must be > 0");
    for (const auto& shape : block_shapes) require_dims(shape.width, shape.height);
    if (rice_g < 0 || rice_g > 8) throw config_error("rice_g must be in 0..8");
    if (!(phi > 0.0)) throw config_error("phi must be > 0");
    if (f_offset < 0.0 || f_offset >= 1.0) throw config_error("f_offset must be in [0, 1)");
    if (r_cbf < 0.0) throw config_error("r_cbf must be >= 0");
    if (sign_bits < 0.0) throw config_error("sign_bits must be >= 0");
    if (k_factor && !(*k_factor >= 0.0)) throw config_error("k_factor must be >= 0");
}

QuantConfig ExperimentConfig::quant_config(int qp) const {
    QuantConfig cfg = make_quant_config(qp, phi);
    cfg.f_offset = f_offset;
    cfg.r_cbf = r_cbf;
    cfg.sign_bits = sign_bits;
    return cfg;
}

ExperimentConfig config_from_kv(const KvDoc& doc) {
    static const std::set<std::string> known = {
        "qp_list", "sigma_list", "block_shapes", "blocks_per_cell", "seed",
        "rate_mode", "k_mode", "k_factor", "prune", "rice_g",
        "phi", "r_cbf", "sign_bits", "f_offset", "params_file"};
    for (const auto& key : doc.keys())
        if (!known.count(key)) throw config_error("unknown config key '" + key + "'");

    ExperimentConfig cfg;
    if (doc.has("qp_list")) {
        cfg.qp_list.clear();
        for (const auto& s : doc.get_array("qp_list")) cfg.qp_list.push_back(std::stoi(s));
    }
    if (doc.has("sigma_list")) {
        cfg.sigma_list.clear();
        for (const auto& s : doc.get_array("sigma_list")) cfg.sigma_list.push_back(std::stod(s));
    }
    if (doc.has("block_shapes")) {
        cfg.block_shapes.clear();
        for (const auto& s : doc.get_array("block_shapes"))
            cfg.block_shapes.push_back(shape_from_str(s));
    }
    cfg.blocks_per_cell = static_cast<int>(doc.get_i64("blocks_per_cell", cfg.blocks_per_cell));
    cfg.seed = doc.get_u64("seed", cfg.seed);
    if (doc.has("rate_mode")) cfg.rate_mode = rate_mode_from_string(doc.get_str("rate_mode"));
    if (doc.has("k_mode")) cfg.k_mode = k_mode_from_string(doc.get_str("k_mode"));
    if (doc.has("k_factor")) cfg.k_factor = doc.get_f64("k_factor");
    cfg.pruning = doc.get_bool("prune", cfg.pruning);
    cfg.rice_g = static_cast<int>(doc.get_i64("rice_g", cfg.rice_g));
    cfg.phi = doc.get_f64("phi", cfg.phi);
    cfg.r_cbf = doc.get_f64("r_cbf", cfg.r_cbf);
    cfg.sign_bits = doc.get_f64("sign_bits", cfg.sign_bits);
    cfg.f_offset = doc.get_f64("f_offset", cfg.f_offset);
    cfg.params_file = doc.get_str("params_file", cfg.params_file);
    cfg.validate();
    return cfg;
}

BlockRateObservation observe_block(const Block& block, const QuantConfig& config, int rice_g,
                                   const LastPosTable& lp) {
    const HdqResult hdq = hdq_quantize(block, config);

    // Coded symbols: hard-decision levels mapped to indices, |idx| = ceil(|l|/2).
    std::vector<long long> indices(hdq.levels.size(), 0);
    for (std::size_t i = 0; i < hdq.levels.size(); ++i) {
        const long long l = hdq.levels[i];
        const long long mag = (std::llabs(l) + 1) >> 1;
        indices[i] = l < 0 ? -mag : mag;
    }

    const Norms norms = count_norms(indices);
    BlockRateObservation ob;
    ob.l0_norm = static_cast<double>(norms.l0);
    ob.l1_norm = static_cast<double>(norms.l1);
    ob.r_lp = hdq.last_pos >= 0 ? lp.at_scan(hdq.last_pos) : 0.0;
    ob.actual_bits = block_actual_bits(indices, hdq.last_pos, rice_g, config.r_cbf, lp);
    return ob;
}

std::vector<FitCell> run_fit(const ExperimentConfig& config) {
    config.validate();

    std::vector<FitCell> out;
    for (const int qp : config.qp_list) {
        const QuantConfig qcfg = config.quant_config(qp);
        std::vector<BlockRateObservation> obs;

        std::uint64_t cell_idx = 0;
        for (const double sigma : config.sigma_list) {
            for (const auto& shape : config.block_shapes) {
                const LastPosTable lp = make_last_pos_table(shape.width, shape.height);
                for (int b = 0; b < config.blocks_per_cell; ++b) {
                    const Block block = sample_block(
                        sigma, shape.width, shape.height,
                        block_seed(config.seed, kSeedFit ^ static_cast<std::uint64_t>(qp),
                                   cell_idx, static_cast<std::uint64_t>(b)));
                    obs.push_back(observe_block(block, qcfg, config.rice_g, lp));
                }
                ++cell_idx;
            }
        }

        FitCell cell;
        cell.qp = qp;
        try {
            cell.report = fit_rate_params(obs);
        } catch (const fit_error& e) {
            throw fit_error("qp " + std::to_string(qp) + " cell: " + e.what());
        }
        if (!(cell.report.params.alpha > 0.0) || !(cell.report.params.beta > 0.0))
            throw fit_error("qp " + std::to_string(qp) +
                            " cell: fitted alpha/beta not positive (alpha = " +
                            format_double(cell.report.params.alpha) +
                            ", beta = " + format_double(cell.report.params.beta) + ")");
        out.push_back(cell);
    }
    return out;
}

KvDoc fit_to_kv(const std::vector<FitCell>& cells) {
    KvDoc doc;
    doc.set("kind", "fit_report");
    std::vector<std::string> qps;
    for (const auto& c : cells) qps.push_back(std::to_string(c.qp));
    doc.set_array("qp_list", qps);
    for (const auto& c : cells) {
        const std::string p = "qp." + std::to_string(c.qp) + ".";
        doc.set(p + "alpha", c.report.params.alpha);
        doc.set(p + "beta", c.report.params.beta);
        doc.set(p + "gamma", c.report.params.gamma);
        doc.set(p + "epsilon", c.report.params.epsilon);
        doc.set(p + "r_squared", c.report.r_squared);
        doc.set(p + "residual_rms", c.report.residual_rms);
        doc.set(p + "observations", static_cast<std::uint64_t>(c.report.observations));
    }
    return doc;
}

std::vector<FitCell> fit_from_kv(const KvDoc& doc) {
    if (doc.get_str("kind", "") != "fit_report")
        throw config_error("not a fit report (kind != fit_report)");
    std::vector<FitCell> cells;
    for (const auto& qp_str : doc.get_array("qp_list")) {
        FitCell c;
        c.qp = std::stoi(qp_str);
        const std::string p = "qp." + qp_str + ".";
        c.report.params.alpha = doc.get_f64(p + "alpha");
        c.report.params.beta = doc.get_f64(p + "beta");
        c.report.params.gamma = doc.get_f64(p + "gamma");
        c.report.params.epsilon = doc.get_f64(p + "epsilon");
        c.report.r_squared = doc.get_f64(p + "r_squared");
        c.report.residual_rms = doc.get_f64(p + "residual_rms");
        c.report.observations =
            static_cast<std::size_t>(doc.get_i64(p + "observations"));
        cells.push_back(c);
    }
    return cells;
}

void OpTotals::add(const OpCounters& c) {
    branches += c.branches;
    dist_evals += c.dist_evals;
    rate_evals += c.rate_evals;
    adds += c.adds;
    compares += c.compares;
    selects += c.selects;
    stages += c.stages;
}

namespace {

std::vector<FitCell> resolve_params(const ExperimentConfig& config) {
    if (!config.params_file.empty()) {
        const std::vector<FitCell> cells = fit_from_kv(KvDoc::load(config.params_file));
        for (const int qp : config.qp_list)
            if (!params_for(cells, qp))
                throw config_error("params_file has no parameters for qp " + std::to_string(qp));
        return cells;
    }
    return run_fit(config);
}

bool needs_params(const ExperimentConfig& config) {
    return config.rate_mode == RateMode::kLinearModel || config.k_mode == KMode::kAnalytic ||
           config.k_mode == KMode::kExact;
}

DepartureConfig departure_for(const ExperimentConfig& config, const RateModelParams& params) {
    DepartureConfig dep;
    dep.phi = config.phi;
    switch (config.k_mode) {
        case KMode::kSafe: dep.k_factor = 2.0; break;
        case KMode::kRisky: dep.k_factor = 2.5; break;
        case KMode::kAnalytic:
            dep.k_factor = analytic_k_factor(config.phi, params.alpha, params.beta);
            break;
        case KMode::kExact:
            dep.mode = DepartureMode::kExact;
            dep.k_factor = 0.0;
            break;
    }
    if (config.k_factor && dep.mode == DepartureMode::kBound) dep.k_factor = *config.k_factor;
    return dep;
}

} // namespace

BenchReport run_bench(const ExperimentConfig& config) {
    config.validate();

    BenchReport report;
    report.config = config;
    // Rate parameters are needed inside the search for LINEAR_MODEL and for
    // the analytic/exact departure thresholds; plain bound sweeps run
    // without a fit so degenerate fitting data cannot block them.
    if (needs_params(config) || !config.params_file.empty()) report.fits = resolve_params(config);

    const RateModelParams unused_params{1.0, 1.0, 0.0, 0.0};
    std::uint64_t cell_idx = 0;
    for (const int qp : config.qp_list) {
        const QuantConfig qcfg = config.quant_config(qp);
        const RateModelParams* fitted = params_for(report.fits, qp);
        const RateModelParams& params = fitted ? *fitted : unused_params;
        const DepartureConfig dep = departure_for(config, params);

        SearchOptions opts;
        opts.rate_mode = config.rate_mode;
        opts.rice_g = config.rice_g;
        opts.params = &params;

        for (const double sigma : config.sigma_list) {
            for (const auto& shape : config.block_shapes) {
                BenchCell cell;
                cell.qp = qp;
                cell.sigma = sigma;
                cell.shape = shape;
                cell.blocks = config.blocks_per_cell;
                cell.k_factor = dep.mode == DepartureMode::kBound ? dep.k_factor : 0.0;

                double cost_full = 0.0, cost_accel = 0.0;
                double bits_full = 0.0, bits_accel = 0.0;
                std::vector<int> hdq_last, tcq_last;
                hdq_last.reserve(static_cast<std::size_t>(config.blocks_per_cell));
                tcq_last.reserve(static_cast<std::size_t>(config.blocks_per_cell));

                const auto t0 = std::chrono::steady_clock::now();
                for (int b = 0; b < config.blocks_per_cell; ++b) {
                    const Block block = sample_block(
                        sigma, shape.width, shape.height,
                        block_seed(config.seed, kSeedBench, cell_idx,
                                   static_cast<std::uint64_t>(b)));

                    const TrellisResult full = tcq_search(block, qcfg, opts);
                    const TrellisResult accel =
                        accelerated_search(block, qcfg, opts, dep, params, config.pruning);
                    const HdqResult hdq = hdq_quantize(block, qcfg);

                    cost_full += full.total_cost;
                    cost_accel += accel.total_cost;
                    bits_full += full.total_bits;
                    bits_accel += accel.total_bits;
                    cell.full.add(full.counters);
                    cell.accel.add(accel.counters);
                    hdq_last.push_back(hdq.last_pos);
                    tcq_last.push_back(full.last_pos);
                }
                const auto t1 = std::chrono::steady_clock::now();
                cell.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

                const double n = static_cast<double>(config.blocks_per_cell);
                cell.mean_cost_full = cost_full / n;
                cell.mean_cost_accel = cost_accel / n;
                cell.mean_bits_full = bits_full / n;
                cell.mean_bits_accel = bits_accel / n;
                cell.rel_cost_delta =
                    cell.mean_cost_full != 0.0
                        ? (cell.mean_cost_accel - cell.mean_cost_full) / cell.mean_cost_full
                        : 0.0;
                cell.branch_saving =
                    cell.full.branches != 0
                        ? 1.0 - static_cast<double>(cell.accel.branches) /
                                    static_cast<double>(cell.full.branches)
                        : 0.0;
                cell.hdq_last_median = median_of(hdq_last);
                cell.tcq_last_median = median_of(tcq_last);

                report.cells.push_back(cell);
                ++cell_idx;
            }
        }
    }
    return report;
}

namespace {

const char* kBenchColumns =
    "qp,sigma,shape,blocks,rate_mode,k_mode,k_factor,prune,"
    "mean_cost_full,mean_cost_accel,rel_cost_delta,mean_bits_full,mean_bits_accel,"
    "branches_full,branches_accel,branch_saving,"
    "dist_evals_full,dist_evals_accel,rate_evals_full,rate_evals_accel,"
    "adds_full,adds_accel,compares_full,compares_accel,selects_full,selects_accel,"
    "stages_full,stages_accel,hdq_last_median,tcq_last_median,wall_ms";

} // namespace

std::string bench_cells_csv(const BenchReport& report, bool reproducible) {
    std::string out = kBenchColumns;
    out += '\n';
    for (const auto& c : report.cells) {
        out += std::to_string(c.qp) + "," + format_double(c.sigma) + "," + shape_str(c.shape) +
               "," + std::to_string(c.blocks) + "," + to_string(report.config.rate_mode) + "," +
               to_string(report.config.k_mode) + "," + format_double(c.k_factor) + "," +
               (report.config.pruning ? "on" : "off") + "," + format_double(c.mean_cost_full) +
               "," + format_double(c.mean_cost_accel) + "," + format_double(c.rel_cost_delta) +
               "," + format_double(c.mean_bits_full) + "," + format_double(c.mean_bits_accel) +
               "," + std::to_string(c.full.branches) + "," + std::to_string(c.accel.branches) +
               "," + format_double(c.branch_saving) + "," + std::to_string(c.full.dist_evals) +
               "," + std::to_string(c.accel.dist_evals) + "," + std::to_string(c.full.rate_evals) +
               "," + std::to_string(c.accel.rate_evals) + "," + std::to_string(c.full.adds) + "," +
               std::to_string(c.accel.adds) + "," + std::to_string(c.full.compares) + "," +
               std::to_string(c.accel.compares) + "," + std::to_string(c.full.selects) + "," +
               std::to_string(c.accel.selects) + "," + std::to_string(c.full.stages) + "," +
               std::to_string(c.accel.stages) + "," + format_double(c.hdq_last_median) + "," +
               format_double(c.tcq_last_median) + ",";
        if (!reproducible) out += format_double(c.wall_ms);
        out += '\n';
    }
    return out;
}

namespace {

void totals_to_kv(KvDoc& doc, const std::string& prefix, const OpTotals& t) {
    doc.set(prefix + "branches", static_cast<std::uint64_t>(t.branches));
    doc.set(prefix + "dist_evals", static_cast<std::uint64_t>(t.dist_evals));
    doc.set(prefix + "rate_evals", static_cast<std::uint64_t>(t.rate_evals));
    doc.set(prefix + "adds", static_cast<std::uint64_t>(t.adds));
    doc.set(prefix + "compares", static_cast<std::uint64_t>(t.compares));
    doc.set(prefix + "selects", static_cast<std::uint64_t>(t.selects));
    doc.set(prefix + "stages", static_cast<std::uint64_t>(t.stages));
}

OpTotals totals_from_kv(const KvDoc& doc, const std::string& prefix) {
    OpTotals t;
    t.branches = doc.get_u64(prefix + "branches", 0);
    t.dist_evals = doc.get_u64(prefix + "dist_evals", 0);
    t.rate_evals = doc.get_u64(prefix + "rate_evals", 0);
    t.adds = doc.get_u64(prefix + "adds", 0);
    t.compares = doc.get_u64(prefix + "compares", 0);
    t.selects = doc.get_u64(prefix + "selects", 0);
    t.stages = doc.get_u64(prefix + "stages", 0);
    return t;
}

} // namespace

KvDoc bench_to_kv(const BenchReport& report, bool reproducible) {
    KvDoc doc;
    doc.set("kind", "bench_summary");
    doc.set("rate_mode", to_string(report.config.rate_mode));
    doc.set("k_mode", to_string(report.config.k_mode));
    doc.set("prune", report.config.pruning);
    doc.set("rice_g", static_cast<std::int64_t>(report.config.rice_g));
    doc.set("phi", report.config.phi);
    doc.set("r_cbf", report.config.r_cbf);
    doc.set("sign_bits", report.config.sign_bits);
    doc.set("f_offset", report.config.f_offset);
    doc.set("seed", static_cast<std::uint64_t>(report.config.seed));
    doc.set("blocks_per_cell", static_cast<std::int64_t>(report.config.blocks_per_cell));

    std::vector<std::string> qps;
    for (const auto& f : report.fits) qps.push_back(std::to_string(f.qp));
    doc.set_array("fit_qp_list", qps);
    for (const auto& f : report.fits) {
        const std::string p = "fit." + std::to_string(f.qp) + ".";
        doc.set(p + "alpha", f.report.params.alpha);
        doc.set(p + "beta", f.report.params.beta);
        doc.set(p + "gamma", f.report.params.gamma);
        doc.set(p + "epsilon", f.report.params.epsilon);
        doc.set(p + "r_squared", f.report.r_squared);
        doc.set(p + "residual_rms", f.report.residual_rms);
        doc.set(p + "observations", static_cast<std::uint64_t>(f.report.observations));
    }

    doc.set("cells", static_cast<std::int64_t>(report.cells.size()));
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const BenchCell& c = report.cells[i];
        const std::string p = "cell." + std::to_string(i) + ".";
        doc.set(p + "qp", static_cast<std::int64_t>(c.qp));
        doc.set(p + "sigma", c.sigma);
        doc.set(p + "shape", shape_str(c.shape));
        doc.set(p + "blocks", static_cast<std::int64_t>(c.blocks));
        doc.set(p + "k_factor", c.k_factor);
        doc.set(p + "mean_cost_full", c.mean_cost_full);
        doc.set(p + "mean_cost_accel", c.mean_cost_accel);
        doc.set(p + "rel_cost_delta", c.rel_cost_delta);
        doc.set(p + "mean_bits_full", c.mean_bits_full);
        doc.set(p + "mean_bits_accel", c.mean_bits_accel);
        totals_to_kv(doc, p + "full.", c.full);
        totals_to_kv(doc, p + "accel.", c.accel);
        doc.set(p + "branch_saving", c.branch_saving);
        doc.set(p + "hdq_last_median", c.hdq_last_median);
        doc.set(p + "tcq_last_median", c.tcq_last_median);
        if (!reproducible) doc.set(p + "wall_ms", c.wall_ms);
    }

    if (!reproducible) {
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        doc.set("timestamp_unix_ms",
                static_cast<std::int64_t>(
                    std::chrono::duration_cast<std::chrono::milliseconds>(now).count()));
    }
    return doc;
}

BenchReport bench_from_kv(const KvDoc& doc) {
    if (doc.get_str("kind", "") != "bench_summary")
        throw config_error("not a bench summary (kind != bench_summary)");

    BenchReport report;
    report.config.rate_mode = rate_mode_from_string(doc.get_str("rate_mode"));
    report.config.k_mode = k_mode_from_string(doc.get_str("k_mode"));
    report.config.pruning = doc.get_bool("prune", false);
    report.config.rice_g = static_cast<int>(doc.get_i64("rice_g"));
    report.config.phi = doc.get_f64("phi");
    report.config.r_cbf = doc.get_f64("r_cbf");
    report.config.sign_bits = doc.get_f64("sign_bits");
    report.config.f_offset = doc.get_f64("f_offset");
    report.config.seed = doc.get_u64("seed", 1);
    report.config.blocks_per_cell = static_cast<int>(doc.get_i64("blocks_per_cell"));

    for (const auto& qp_str : doc.get_array("fit_qp_list")) {
        FitCell f;
        f.qp = std::stoi(qp_str);
        const std::string p = "fit." + qp_str + ".";
        f.report.params.alpha = doc.get_f64(p + "alpha");
        f.report.params.beta = doc.get_f64(p + "beta");
        f.report.params.gamma = doc.get_f64(p + "gamma");
        f.report.params.epsilon = doc.get_f64(p + "epsilon");
        f.report.r_squared = doc.get_f64(p + "r_squared");
        f.report.residual_rms = doc.get_f64(p + "residual_rms");
        f.report.observations = static_cast<std::size_t>(doc.get_i64(p + "observations"));
        report.fits.push_back(f);
    }

    const std::int64_t n_cells = doc.get_i64("cells");
    for (std::int64_t i = 0; i < n_cells; ++i) {
        const std::string p = "cell." + std::to_string(i) + ".";
        BenchCell c;
        c.qp = static_cast<int>(doc.get_i64(p + "qp"));
        c.sigma = doc.get_f64(p + "sigma");
        c.shape = shape_from_str(doc.get_str(p + "shape"));
        c.blocks = static_cast<int>(doc.get_i64(p + "blocks"));
        c.k_factor = doc.get_f64(p + "k_factor");
        c.mean_cost_full = doc.get_f64(p + "mean_cost_full");
        c.mean_cost_accel = doc.get_f64(p + "mean_cost_accel");
        c.rel_cost_delta = doc.get_f64(p + "rel_cost_delta");
        c.mean_bits_full = doc.get_f64(p + "mean_bits_full");
        c.mean_bits_accel = doc.get_f64(p + "mean_bits_accel");
        c.full = totals_from_kv(doc, p + "full.");
        c.accel = totals_from_kv(doc, p + "accel.");
        c.branch_saving = doc.get_f64(p + "branch_saving");
        c.hdq_last_median = doc.get_f64(p + "hdq_last_median");
        c.tcq_last_median = doc.get_f64(p + "tcq_last_median");
        c.wall_ms = doc.get_f64(p + "wall_ms", 0.0);
        report.cells.push_back(c);
    }
    return report;
}

OracleOutcome run_oracle(const ExperimentConfig& config, const OracleOptions& options) {
    config.validate();

    // Guard before any search: worst case is 5 candidates at every position.
    for (const auto& shape : config.block_shapes) {
        double worst = 1.0;
        for (int i = 0; i < shape.width * shape.height; ++i) worst *= 5.0;
        if (worst > 1e7)
            throw size_error("oracle: shape " + shape_str(shape) +
                             " exceeds the brute-force guard (5^(W*H) > 1e7)");
    }

    RateModelParams fallback{2.0, 1.0, 1.0, 0.5};
    std::vector<FitCell> fits;
    if (config.rate_mode == RateMode::kLinearModel) fits = resolve_params(config);

    OracleOutcome outcome;
    std::uint64_t cell_idx = 0;
    for (const int qp : config.qp_list) {
        const QuantConfig qcfg = config.quant_config(qp);
        SearchOptions opts;
        opts.rate_mode = config.rate_mode;
        opts.rice_g = config.rice_g;
        opts.params = config.rate_mode == RateMode::kLinearModel ? params_for(fits, qp)
                                                                 : &fallback;

        for (const double sigma : config.sigma_list) {
            for (const auto& shape : config.block_shapes) {
                for (int b = 0; b < config.blocks_per_cell; ++b) {
                    const Block block = sample_block(
                        sigma, shape.width, shape.height,
                        block_seed(config.seed, kSeedOracle, cell_idx,
                                   static_cast<std::uint64_t>(b)));

                    const TrellisResult fast = tcq_search(block, qcfg, opts);
                    const TrellisResult exact = brute_force_search(block, qcfg, opts);
                    ++outcome.draws;

                    double searched = fast.total_cost;
                    searched += options.self_test_perturb * (1.0 + std::fabs(searched));
                    const double denom = std::max(std::fabs(exact.total_cost), 1e-300);
                    const double rel = std::fabs(searched - exact.total_cost) / denom;
                    outcome.worst_rel_err = std::max(outcome.worst_rel_err, rel);
                    if (rel > 1e-9) {
                        ++outcome.mismatches;
                        if (outcome.first_counterexample.empty()) {
                            std::ostringstream os;
                            os << "qp = " << qp << ", sigma = " << format_double(sigma)
                               << ", shape = " << shape_str(shape) << ", block " << b << "\n";
                            os << "coeffs =";
                            for (const double c : block.coeffs) os << " " << format_double(c);
                            os << "\nsearched_cost = " << format_double(searched)
                               << "\nexhaustive_cost = " << format_double(exact.total_cost)
                               << "\nrel_err = " << format_double(rel) << "\n";
                            outcome.first_counterexample = os.str();
                        }
                    }
                }
                ++cell_idx;
            }
        }
    }
    return outcome;
}

KvDoc oracle_to_kv(const OracleOutcome& outcome) {
    KvDoc doc;
    doc.set("kind", "oracle_summary");
    doc.set("draws", static_cast<std::int64_t>(outcome.draws));
    doc.set("mismatches", static_cast<std::int64_t>(outcome.mismatches));
    doc.set("worst_rel_err", outcome.worst_rel_err);
    doc.set("status", std::string(outcome.pass() ? "pass" : "fail"));
    return doc;
}

StatsTable run_stats(const ExperimentConfig& config) {
    config.validate();

    StatsTable table;
    for (const double sigma : config.sigma_list) {
        for (const int qp : config.qp_list) {
            StatsRow row;
            row.sigma = sigma;
            row.qp = qp;
            row.q_step = q_step_from_qp(qp);
            row.lambda_lap = lambda_from_sigma(sigma);

            const ClosedFormStats cf = closed_form_stats(row.lambda_lap, row.q_step);
            row.tau = cf.tau;
            row.p_nz = cf.p_nz;
            row.d_zero = cf.d_zero;
            row.d_nonzero = cf.d_nonzero;
            row.d_expected = cf.d_expected;
            row.r0_exact = cf.r0_hat;
            row.r0_taylor1 = rate_from_pnz(cf.p_nz, 1);
            row.r0_taylor2 = rate_from_pnz(cf.p_nz, 2);
            row.r0_taylor3 = rate_from_pnz(cf.p_nz, 3);

            const NumericStats num = numeric_stats(row.lambda_lap, row.q_step);
            row.d_numeric = num.d_expected;
            double worst = 0.0;
            const auto rel = [](double closed, double numeric) {
                return std::fabs(closed - numeric) / std::max(std::fabs(numeric), 1e-300);
            };
            worst = std::max(worst, rel(cf.tau, num.tau));
            worst = std::max(worst, rel(cf.d_zero, num.d_zero));
            worst = std::max(worst, rel(cf.d_nonzero, num.d_nonzero));
            worst = std::max(worst, rel(cf.d_expected, num.d_expected));
            row.max_rel_err = worst;

            for (int l = 0; l <= 8; ++l)
                row.self_info[static_cast<std::size_t>(l)] =
                    self_info_rate(l, row.lambda_lap, row.q_step);

            table.rows.push_back(row);
        }
    }
    return table;
}

std::string stats_csv(const StatsTable& table) {
    std::string out =
        "sigma,qp,q_step,lambda_lap,tau,p_nz,d_zero,d_nonzero,d_expected,d_numeric,"
        "max_rel_err,r0_exact,r0_taylor1,r0_taylor2,r0_taylor3";
    for (int l = 0; l <= 8; ++l) out += ",selfinfo_l" + std::to_string(l);
    out += '\n';
    for (const auto& r : table.rows) {
        out += format_double(r.sigma) + "," + std::to_string(r.qp) + "," +
               format_double(r.q_step) + "," + format_double(r.lambda_lap) + "," +
               format_double(r.tau) + "," + format_double(r.p_nz) + "," +
               format_double(r.d_zero) + "," + format_double(r.d_nonzero) + "," +
               format_double(r.d_expected) + "," + format_double(r.d_numeric) + "," +
               format_double(r.max_rel_err) + "," + format_double(r.r0_exact) + "," +
               format_double(r.r0_taylor1) + "," + format_double(r.r0_taylor2) + "," +
               format_double(r.r0_taylor3);
        for (const double v : r.self_info) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

} // namespace tcq
