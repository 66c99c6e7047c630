#ifndef TCQ_SEARCH_CORE_HPP
#define TCQ_SEARCH_CORE_HPP

// Internal Viterbi machinery shared by tcq_search and accelerated_search.
// Not installed.

#include "tcq/quant.hpp"
#include "tcq/trellis.hpp"

namespace tcq::detail {

// Rounding offset of the soft-quantization pre-pass; candidate construction
// and trellis start determination always use 1/2.
inline constexpr double kPreQuantF = 0.5;

// Highest scan position whose pre-quantized level is non-zero, or
// kNoLastPos when the whole block pre-quantizes to zero.
int trellis_start_pos(const Block& block, const ScanTable& scan, double q_step);

void validate_options(const SearchOptions& options);

double coef_rate(long long idx_mag, const QuantConfig& config, const SearchOptions& options);

// Viterbi search over stages start_pos..0. `prune` applies the per-stage
// candidate elimination. Positions above start_pos are zeroed and charged
// as plain distortion without entering the trellis.
TrellisResult viterbi_search(const Block& block, const QuantConfig& config,
                             const SearchOptions& options, int start_pos, bool prune);

} // namespace tcq::detail

#endif
