#include "tcq/accel.hpp"

#include <cmath>
#include <stdexcept>

#include "tcq/errors.hpp"
#include "search_core.hpp"

namespace tcq {

double analytic_k_factor(double phi, double alpha, double beta) {
    if (!(phi > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
        throw std::domain_error("analytic_k_factor: phi, alpha, beta must be > 0");
    return std::sqrt(phi * alpha) + 0.25 * phi * beta;
}

namespace {

// Index of a level under its parity-matching quantizer: ceil(l / 2).
long long index_of_level(long long level) {
    return (level + 1) >> 1;
}

} // namespace

double departure_threshold(double q_step, const DepartureConfig& departure,
                           const RateModelParams& params, long long l_level,
                           double r_lp_delta) {
    if (!(q_step > 0.0)) throw std::domain_error("departure_threshold: q_step must be > 0");

    if (departure.mode == DepartureMode::kBound) return q_step * departure.k_factor;

    if (l_level < 1)
        throw std::domain_error("departure_threshold: EXACT mode requires l_level >= 1");
    const double lambda = departure.phi * q_step * q_step;
    const double ql = q_step * static_cast<double>(l_level);
    const double rate_term =
        params.alpha + params.beta * static_cast<double>(index_of_level(l_level)) +
        params.gamma * r_lp_delta;
    return 0.5 * (ql + lambda * rate_term / ql);
}

namespace {

template <typename ThresholdFn>
int departure_walk(const Block& block, double q_step, ThresholdFn&& threshold) {
    const ScanTable scan = diagonal_scan(block.width, block.height);
    for (int p = scan.size() - 1; p >= 0; --p) {
        const double c_abs =
            std::fabs(block.coeffs[static_cast<std::size_t>(scan.scan_to_raster[p])]);
        const long long level = scalar_quantize(c_abs, q_step, detail::kPreQuantF);
        if (level == 0) continue; // already zero, keep walking down
        if (c_abs <= threshold(level)) continue; // zeroed, trellis start postponed
        return p;
    }
    return kNoLastPos;
}

} // namespace

int find_departure_point(const Block& block, const QuantConfig& config, double threshold_t) {
    if (threshold_t < 0.0)
        throw std::domain_error("find_departure_point: threshold must be >= 0");
    return departure_walk(block, config.q_step, [threshold_t](long long) { return threshold_t; });
}

int find_departure_point(const Block& block, const QuantConfig& config,
                         const DepartureConfig& departure, const RateModelParams& params) {
    if (departure.mode == DepartureMode::kBound)
        return find_departure_point(block, config, config.q_step * departure.k_factor);
    return departure_walk(block, config.q_step, [&](long long level) {
        return departure_threshold(config.q_step, departure, params, level, 0.0);
    });
}

double delta_distortion(double c_abs, long long l_level, long long delta_l, double q_step) {
    if (!(q_step > 0.0)) throw std::domain_error("delta_distortion: q_step must be > 0");
    const double dl = static_cast<double>(delta_l);
    return -q_step * q_step * dl * dl +
           2.0 * q_step * (c_abs - static_cast<double>(l_level) * q_step) * dl;
}

double delta_rate_linear(long long idx_from, long long idx_to, const RateModelParams& params) {
    int eta = 0;
    if (idx_from == 0 && idx_to != 0)
        eta = 1;
    else if (idx_from != 0 && idx_to == 0)
        eta = -1;
    return -params.alpha * static_cast<double>(eta) -
           params.beta * static_cast<double>(idx_to - idx_from);
}

double departure_delta_j(double c_abs, long long l_level, const RateModelParams& params,
                         const QuantConfig& config, double r_lp_i, double r_lp_j) {
    if (l_level < 1) throw std::domain_error("departure_delta_j: l_level must be >= 1");
    const double ql = config.q_step * static_cast<double>(l_level);
    const double delta_d = -(ql * ql - 2.0 * ql * c_abs);
    const double delta_r =
        -(params.alpha + params.beta * static_cast<double>(index_of_level(l_level)) +
          params.gamma * (r_lp_i - r_lp_j));
    return delta_d + config.lambda_rd * delta_r;
}

PruneDecision prune_candidates(const CandidateSet& candidates, long long l_level) {
    const CandidateSet expected = [&] {
        CandidateSet s;
        s.count = 5;
        if (l_level > 2)
            s.levels = {0, l_level - 2, l_level - 1, l_level, l_level + 1};
        else
            s.levels = {0, 1, 2, 3, 4};
        return s;
    }();
    if (candidates.count != expected.count || candidates.levels != expected.levels)
        throw std::logic_error("prune_candidates: candidate set does not match l_level");

    PruneDecision d;
    if (l_level <= 2) {
        d.case_id = l_level == 0 ? 1 : 2;
        // Drop the two largest levels.
        d.kept.count = 3;
        d.kept.levels = {candidates.levels[0], candidates.levels[1], candidates.levels[2], 0, 0};
        d.dropped.count = 2;
        d.dropped.levels = {candidates.levels[3], candidates.levels[4], 0, 0, 0};
    } else {
        d.case_id = 3;
        // Drop level 0; the pre-quantized level always survives.
        d.kept.count = 4;
        d.kept.levels = {candidates.levels[1], candidates.levels[2], candidates.levels[3],
                         candidates.levels[4], 0};
        d.dropped.count = 1;
        d.dropped.levels = {0, 0, 0, 0, 0};
    }
    return d;
}

int prune_case_for(double c_abs, double q_step) {
    if (!(q_step > 0.0)) throw std::domain_error("prune_case_for: q_step must be > 0");
    if (c_abs < 0.5 * q_step) return 1;
    if (c_abs < 2.5 * q_step) return 2;
    return 3;
}

TrellisResult accelerated_search(const Block& block, const QuantConfig& config,
                                 const SearchOptions& options,
                                 const DepartureConfig& departure,
                                 const RateModelParams& params, bool pruning) {
    detail::validate_options(options);
    require_dims(block.width, block.height);
    const int start = find_departure_point(block, config, departure, params);
    return detail::viterbi_search(block, config, options, start, pruning);
}

} // namespace tcq
