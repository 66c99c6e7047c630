#ifndef TCQ_TESTS_HELPERS_HPP
#define TCQ_TESTS_HELPERS_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "tcq/prng.hpp"
#include "tcq/quant.hpp"
#include "tcq/rate_model.hpp"
#include "tcq/trellis.hpp"

namespace tcq::test {

inline Block make_block(int width, int height, std::vector<double> raster_coeffs) {
    Block b;
    b.width = width;
    b.height = height;
    b.coeffs = std::move(raster_coeffs);
    return b;
}

/// Test-local uniform in [lo, hi) from a counter-based stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform_open(stream_at(seed_, n_++));
    }
    std::uint64_t bits() { return stream_at(seed_, n_++); }

private:
    std::uint64_t seed_;
    std::uint64_t n_ = 0;
};

/// Independent recomputation of (distortion, bits) from a search result,
/// written from the coding rules rather than the searcher's accumulators.
struct RecomputedCost {
    double distortion = 0.0;
    double bits = 0.0;
};

inline double ref_coef_rate(long long idx, RateMode mode, const QuantConfig& cfg, int rice_g,
                            const RateModelParams* params) {
    const long long mag = idx < 0 ? -idx : idx;
    if (mode == RateMode::kSurrogate) {
        if (mag == 0) return 1.0;
        return 1.0 + cfg.sign_bits + static_cast<double>(((mag - 1) >> rice_g) + 1 + rice_g);
    }
    if (mag == 0) return 0.0;
    return params->alpha + params->beta * static_cast<double>(mag);
}

inline RecomputedCost recompute_cost(const Block& block, const QuantConfig& cfg,
                                     const TrellisResult& res, RateMode mode, int rice_g,
                                     const RateModelParams* params) {
    const ScanTable scan = diagonal_scan(block.width, block.height);
    RecomputedCost out;

    // Replay the decoder over the chosen indices from last_pos downward.
    std::vector<long long> levels(res.indices.size(), 0);
    if (res.last_pos >= 0) {
        std::vector<long long> high_to_low;
        for (int p = res.last_pos; p >= 0; --p)
            high_to_low.push_back(res.indices[static_cast<std::size_t>(p)]);
        const DequantResult dec = dequantize_block(high_to_low, cfg.q_step);
        for (int p = res.last_pos; p >= 0; --p)
            levels[static_cast<std::size_t>(p)] =
                dec.levels[static_cast<std::size_t>(res.last_pos - p)];
    }

    for (int p = 0; p < scan.size(); ++p) {
        const double c = block.coeffs[static_cast<std::size_t>(scan.scan_to_raster[p])];
        const double rec = static_cast<double>(levels[static_cast<std::size_t>(p)]) * cfg.q_step;
        out.distortion += (c - rec) * (c - rec);
    }
    if (res.last_pos >= 0) {
        const auto [x, y] = scan.xy(res.last_pos);
        out.bits = cfg.r_cbf + last_pos_bits(x, y, block.width, block.height);
        for (int p = 0; p <= res.last_pos; ++p)
            out.bits += ref_coef_rate(res.indices[static_cast<std::size_t>(p)], mode, cfg, rice_g,
                                      params);
    }
    return out;
}

} // namespace tcq::test

#endif
