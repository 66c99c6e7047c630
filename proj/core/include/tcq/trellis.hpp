#ifndef TCQ_TRELLIS_HPP
#define TCQ_TRELLIS_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "tcq/quant.hpp"
#include "tcq/rate_model.hpp"

namespace tcq {

inline constexpr int kNoLastPos = -1;

/// Per-coefficient rate inside the search.
///   kSurrogate:   sig + sign + Golomb-Rice bits of the index
///   kLinearModel: alpha * [idx != 0] + beta * |idx|
enum class RateMode { kSurrogate, kLinearModel };

/// Candidate reconstruction levels for one coefficient magnitude.
/// Pre-quantized level l > 2 yields {0, l-2, l-1, l, l+1}; l in {0, 1, 2}
/// yields {0, 1, 2, 3, 4}.
struct CandidateSet {
    std::array<long long, 5> levels{};
    int count = 0;

    bool contains(long long level) const {
        for (int i = 0; i < count; ++i)
            if (levels[i] == level) return true;
        return false;
    }
};

CandidateSet build_candidates(double c_abs, double q_step);

/// Operation tallies for one traversed stage.
struct StageCounters {
    int scan_pos = 0;
    int active_nodes = 0;
    std::uint64_t branches = 0;
    std::uint64_t dist_evals = 0;
    std::uint64_t rate_evals = 0;
    std::uint64_t adds = 0;
    std::uint64_t compares = 0;
    std::uint64_t selects = 0;
};

struct OpCounters {
    std::uint64_t branches = 0;
    std::uint64_t dist_evals = 0;
    std::uint64_t rate_evals = 0;
    std::uint64_t adds = 0;
    std::uint64_t compares = 0;
    std::uint64_t selects = 0;
    std::uint64_t stages = 0;
    std::vector<StageCounters> per_stage;
};

struct TrellisResult {
    std::vector<long long> indices; // per scan position, signed
    std::vector<int> states;        // per scan position; kUncoded above last_pos
    double total_cost = 0.0;
    double total_bits = 0.0;
    double total_distortion = 0.0;
    int last_pos = kNoLastPos;
    OpCounters counters;
};

struct SearchOptions {
    RateMode rate_mode = RateMode::kSurrogate;
    int rice_g = 0;
    const RateModelParams* params = nullptr; // required for kLinearModel
};

/// J = D + lambda * R.
double rd_cost(double distortion, double bits, double lambda_rd);

/// Full Viterbi search over the block trellis. Stages run from the highest
/// scan position with a non-zero pre-quantized level down to 0; positions
/// above contribute their zeroing distortion without entering the trellis.
TrellisResult tcq_search(const Block& block, const QuantConfig& config,
                         const SearchOptions& options);

/// Exhaustive enumeration of every per-position candidate assignment the
/// trellis could produce; the optimality oracle. Guarded to at most 1e7
/// combinations (size_error beyond that). Ties break toward the smaller
/// l1 norm, then the lexicographically smaller magnitude sequence.
TrellisResult brute_force_search(const Block& block, const QuantConfig& config,
                                 const SearchOptions& options);

/// Hard-decision quantization of a whole block, no trellis.
struct HdqResult {
    std::vector<long long> levels; // scan order, signed
    int last_pos = kNoLastPos;
    long long l0 = 0;
    long long l1 = 0;
};

HdqResult hdq_quantize(const Block& block, const QuantConfig& config);

} // namespace tcq

#endif
