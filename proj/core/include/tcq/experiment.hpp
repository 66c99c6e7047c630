#ifndef TCQ_EXPERIMENT_HPP
#define TCQ_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcq/accel.hpp"
#include "tcq/kvdoc.hpp"
#include "tcq/laplace.hpp"
#include "tcq/rate_model.hpp"
#include "tcq/trellis.hpp"

namespace tcq {

/// Departure threshold policy selector for experiment runs.
///   safe     -> bound, k = 2
///   risky    -> bound, k = 2.5
///   analytic -> bound, k = sqrt(phi * alpha) + phi * beta / 4 per QP
///   exact    -> per-coefficient RD threshold
enum class KMode { kSafe, kRisky, kAnalytic, kExact };

std::string to_string(KMode mode);
std::string to_string(RateMode mode);
KMode k_mode_from_string(const std::string& s);       // throws config_error
RateMode rate_mode_from_string(const std::string& s); // throws config_error

struct BlockShape {
    int width = 0;
    int height = 0;
};

struct ExperimentConfig {
    std::vector<int> qp_list{22, 27, 32, 37};
    std::vector<double> sigma_list{8.0, 24.0, 72.0}; // a spread of block energies
    std::vector<BlockShape> block_shapes{{8, 8}};
    int blocks_per_cell = 500;
    std::uint64_t seed = 1;
    RateMode rate_mode = RateMode::kSurrogate;
    KMode k_mode = KMode::kSafe;
    std::optional<double> k_factor; // overrides the bound factor when set
    bool pruning = false;
    int rice_g = 0;
    double phi = 0.0897;
    double r_cbf = 1.0;
    double sign_bits = 1.0;
    double f_offset = 0.5;
    std::string params_file; // optional pre-fitted rate parameters

    void validate() const; // throws config_error

    QuantConfig quant_config(int qp) const;
};

/// Read config keys from a kv document; unknown keys are rejected.
ExperimentConfig config_from_kv(const KvDoc& doc);

struct FitCell {
    int qp = 0;
    FitReport report;
};

/// One observation per sampled block: hard-decision indices fed through the
/// surrogate coder.
BlockRateObservation observe_block(const Block& block, const QuantConfig& config, int rice_g,
                                   const LastPosTable& lp);

/// Fits the block rate model per QP, pooling every (sigma, shape) cell.
/// Asserts alpha, beta > 0 for each QP; throws fit_error naming the cell
/// otherwise.
std::vector<FitCell> run_fit(const ExperimentConfig& config);

KvDoc fit_to_kv(const std::vector<FitCell>& cells);
std::vector<FitCell> fit_from_kv(const KvDoc& doc);

struct OpTotals {
    std::uint64_t branches = 0;
    std::uint64_t dist_evals = 0;
    std::uint64_t rate_evals = 0;
    std::uint64_t adds = 0;
    std::uint64_t compares = 0;
    std::uint64_t selects = 0;
    std::uint64_t stages = 0;

    void add(const OpCounters& c);
    friend bool operator==(const OpTotals&, const OpTotals&) = default;
};

struct BenchCell {
    int qp = 0;
    double sigma = 0.0;
    BlockShape shape;
    int blocks = 0;
    double k_factor = 0.0; // bound factor in effect; 0 when mode is exact
    double mean_cost_full = 0.0;
    double mean_cost_accel = 0.0;
    double rel_cost_delta = 0.0;
    double mean_bits_full = 0.0;
    double mean_bits_accel = 0.0;
    OpTotals full;
    OpTotals accel;
    double branch_saving = 0.0;      // 1 - accel branches / full branches
    double hdq_last_median = 0.0;    // -1 stands for all-zero blocks
    double tcq_last_median = 0.0;
    double wall_ms = 0.0;            // informational, omitted when reproducible
};

struct BenchReport {
    ExperimentConfig config;
    std::vector<FitCell> fits;
    std::vector<BenchCell> cells;
};

/// Runs full and accelerated searches on identical blocks for every
/// (qp, sigma, shape) cell.
BenchReport run_bench(const ExperimentConfig& config);

/// CSV table, one row per cell. Fixed column set, '.' decimal separator,
/// LF line endings. The wall_ms column is left empty when `reproducible`.
std::string bench_cells_csv(const BenchReport& report, bool reproducible);

/// Structured-text summary mirroring every cell field plus the fit section.
KvDoc bench_to_kv(const BenchReport& report, bool reproducible);
BenchReport bench_from_kv(const KvDoc& doc);

struct OracleOptions {
    double self_test_perturb = 0.0; // test hook: shifts the searched cost
};

struct OracleOutcome {
    long draws = 0;
    long mismatches = 0;
    double worst_rel_err = 0.0;
    std::string first_counterexample; // block printed verbatim

    bool pass() const { return mismatches == 0; }
};

/// tcq_search against brute_force_search over the configured draws. Shapes
/// must stay within the brute-force guard (W * H <= 10); checked before any
/// search runs.
OracleOutcome run_oracle(const ExperimentConfig& config, const OracleOptions& options = {});

KvDoc oracle_to_kv(const OracleOutcome& outcome);

struct StatsRow {
    double sigma = 0.0;
    int qp = 0;
    double q_step = 0.0;
    double lambda_lap = 0.0;
    double tau = 0.0;
    double p_nz = 0.0;
    double d_zero = 0.0;
    double d_nonzero = 0.0;
    double d_expected = 0.0;
    double d_numeric = 0.0;    // integration route for d_expected
    double max_rel_err = 0.0;  // worst of tau/d_zero/d_nonzero/d_expected
    double r0_exact = 0.0;
    double r0_taylor1 = 0.0;
    double r0_taylor2 = 0.0;
    double r0_taylor3 = 0.0;
    std::array<double, 9> self_info{}; // levels 0..8
};

struct StatsTable {
    std::vector<StatsRow> rows;
};

/// Closed-form table over the (sigma, qp) grid with the numeric-integration
/// cross-check column.
StatsTable run_stats(const ExperimentConfig& config);

std::string stats_csv(const StatsTable& table);

} // namespace tcq

#endif
