#ifndef TCQ_QUANT_HPP
#define TCQ_QUANT_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tcq {

/// A W x H array of transform coefficients in raster order; the unit the
/// trellis consumes.
struct Block {
    int width = 0;
    int height = 0;
    std::vector<double> coeffs; // size width * height, raster order

    int size() const noexcept { return width * height; }
    double at(int x, int y) const { return coeffs[static_cast<std::size_t>(y) * width + x]; }
};

/// Supported block dimensions are anything in [1, 32] on each side.
bool dims_supported(int width, int height) noexcept;
void require_dims(int width, int height); // throws config_error

/// Per-run quantizer knobs. lambda_rd is kept equal to phi * q_step^2.
struct QuantConfig {
    double q_step = 1.0;
    double f_offset = 0.5;  // pre-quantization rounding offset, in [0, 1)
    int qp = 0;             // informational
    double lambda_rd = 0.0897;
    double phi = 0.0897;
    double r_cbf = 1.0;     // bits for the coded-block-flag transition
    double sign_bits = 1.0; // bits charged per non-zero index
};

/// Standard step mapping q_step = 2^((qp - 4) / 6).
double q_step_from_qp(int qp);

/// Config with q_step derived from qp and lambda_rd = phi * q_step^2.
QuantConfig make_quant_config(int qp, double phi = 0.0897);

// Trellis states. Coded states 0..3 select quantizer (state >> 1); kUncoded
// marks positions above the last significant coefficient.
inline constexpr int kUncoded = 4;
inline constexpr int kNumCodedStates = 4;

/// Hard-decision scalar quantization: sign(c) * floor(|c| / q_step + f).
long long scalar_quantize(double c, double q_step, double f_offset);

/// State transition driven by the parity of the coded index.
int next_state(int st, int parity);

/// Level from index and state: 2 * idx - (st >> 1) * sign(idx).
long long reconstruct_level(long long idx, int st);

/// Squared reconstruction error of coding `c` as index `idx` in state `st`.
double branch_distortion(double c, long long idx, int st, double q_step);

/// Decoder replay of a coded index sequence.
struct DequantResult {
    std::vector<long long> levels; // same order as input (highest scan first)
    std::vector<int> states;       // state each index was decoded in
    std::vector<double> recon;     // level * q_step
    int final_state = 0;           // state after the last processed index
};

/// Replays the reconstruction state machine over indices given from the
/// highest scan position downward, starting in state 0.
DequantResult dequantize_block(std::span<const long long> indices_high_to_low, double q_step);

/// Up-right diagonal scan: diagonals d = x + y ascending, larger y first
/// within a diagonal; scan index 0 is (0, 0).
struct ScanTable {
    int width = 0;
    int height = 0;
    std::vector<int> scan_to_raster;
    std::vector<int> raster_to_scan;

    int size() const noexcept { return width * height; }
    std::pair<int, int> xy(int scan_idx) const {
        const int r = scan_to_raster[static_cast<std::size_t>(scan_idx)];
        return {r % width, r / width};
    }
};

ScanTable diagonal_scan(int width, int height);

} // namespace tcq

#endif
