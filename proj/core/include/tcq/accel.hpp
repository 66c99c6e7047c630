#ifndef TCQ_ACCEL_HPP
#define TCQ_ACCEL_HPP

#include "tcq/quant.hpp"
#include "tcq/rate_model.hpp"
#include "tcq/trellis.hpp"

namespace tcq {

/// Departure-point threshold policy.
///   kBound: T = q_step * k_factor (constant per run)
///   kExact: per-coefficient T from the RD-difference closed form
enum class DepartureMode { kBound, kExact };

struct DepartureConfig {
    DepartureMode mode = DepartureMode::kBound;
    double k_factor = 2.0; // used in kBound mode
    double phi = 0.0897;
};

/// k = sqrt(phi * alpha) + phi * beta / 4.
double analytic_k_factor(double phi, double alpha, double beta);

/// Threshold below which |C| at a candidate trellis start may be zeroed.
/// kExact requires l_level >= 1 and uses
///   T = (q*l + lambda * (alpha + beta*idx(l) + gamma*r_lp_delta) / (q*l)) / 2
/// with lambda = phi * q_step^2; kBound returns q_step * k_factor.
double departure_threshold(double q_step, const DepartureConfig& departure,
                           const RateModelParams& params, long long l_level,
                           double r_lp_delta);

/// Walks candidate trellis start positions from the highest non-zero
/// pre-quantized coefficient downward, zeroing every candidate whose |C| is
/// at or below the scalar threshold. Returns the first surviving scan
/// position, or kNoLastPos when every candidate is eliminated.
int find_departure_point(const Block& block, const QuantConfig& config, double threshold_t);

/// Same walk with the threshold supplied by a DepartureConfig; kExact mode
/// evaluates the per-coefficient threshold at each visited position
/// (r_lp_delta fixed at 0).
int find_departure_point(const Block& block, const QuantConfig& config,
                         const DepartureConfig& departure, const RateModelParams& params);

/// Distortion change when level l moves by delta_l:
///   -q^2 * delta_l^2 + 2 * q * (c_abs - l * q) * delta_l.
double delta_distortion(double c_abs, long long l_level, long long delta_l, double q_step);

/// Rate change under the linear model: -alpha * eta - beta * (idx_to - idx_from)
/// with eta = +1 for zero -> non-zero, -1 for non-zero -> zero, else 0.
double delta_rate_linear(long long idx_from, long long idx_to, const RateModelParams& params);

/// RD-cost change of dropping the candidate trellis start at |C| = c_abs,
/// pre-quantized to l_level. Non-positive values certify the drop.
double departure_delta_j(double c_abs, long long l_level, const RateModelParams& params,
                         const QuantConfig& config, double r_lp_i, double r_lp_j);

/// Branch-pruning decision for one candidate set.
/// Case 1 (l = 0) and case 2 (l in {1, 2}) drop the two largest levels;
/// case 3 (l > 2) drops level 0.
struct PruneDecision {
    CandidateSet kept;
    CandidateSet dropped;
    int case_id = 0;
};

PruneDecision prune_candidates(const CandidateSet& candidates, long long l_level);

/// Case id straight from |C| against q/2 and 5q/2, no division.
int prune_case_for(double c_abs, double q_step);

/// Departure-point truncation plus optional per-stage branch pruning on top
/// of the plain Viterbi search. With a zero threshold and pruning off the
/// result is bit-identical to tcq_search.
TrellisResult accelerated_search(const Block& block, const QuantConfig& config,
                                 const SearchOptions& options,
                                 const DepartureConfig& departure,
                                 const RateModelParams& params, bool pruning);

} // namespace tcq

#endif
