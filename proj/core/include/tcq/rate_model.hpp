#ifndef TCQ_RATE_MODEL_HPP
#define TCQ_RATE_MODEL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "tcq/quant.hpp"

namespace tcq {

/// Parameters of the block rate model
///   bits ~= alpha * L0 + beta * L1 + gamma * R_LP + epsilon.
struct RateModelParams {
    double alpha = 0.0;   // bits per non-zero index
    double beta = 0.0;    // bits per unit of index magnitude
    double gamma = 0.0;   // scale on last-position bits
    double epsilon = 0.0; // intercept
};

struct BlockRateObservation {
    double l0_norm = 0.0;
    double l1_norm = 0.0;
    double r_lp = 0.0;
    double actual_bits = 0.0;
};

struct FitReport {
    RateModelParams params;
    double r_squared = 0.0;
    double residual_rms = 0.0;
    std::size_t observations = 0;
};

/// Stateless surrogate coefficient coder: a significance flag, a sign flag,
/// and a Golomb-Rice remainder with parameter rice_g.
///   idx == 0 -> 1 bit;  idx != 0 -> 1 + 1 + Rice(|idx| - 1, g)
/// where Rice(v, g) = (v >> g) + 1 + g.
double surrogate_coeff_bits(long long idx, int rice_g);

/// Rice code length of value v with parameter g.
double rice_bits(long long v, int rice_g);

/// Last-position signaling cost for one coordinate pair, truncated-unary
/// group prefix plus fixed-length suffix, one bit per bin.
double last_pos_bits(int x, int y, int width, int height);

/// Precomputed last_pos_bits lookup in scan order for one block geometry.
struct LastPosTable {
    ScanTable scan;
    std::vector<double> bits_by_scan;

    double at_scan(int scan_idx) const { return bits_by_scan[static_cast<std::size_t>(scan_idx)]; }
};

LastPosTable make_last_pos_table(int width, int height);

/// alpha * l0 + beta * l1 + gamma * r_lp + epsilon.
double block_rate_estimate(double l0, double l1, double r_lp, const RateModelParams& params);

struct Norms {
    long long l0 = 0;
    long long l1 = 0;
};

/// l0 = count of non-zero indices, l1 = sum of |index|.
Norms count_norms(std::span<const long long> indices);

/// Ground-truth surrogate bits of a coded block: r_cbf (when any index is
/// non-zero) + last-position bits + per-coefficient surrogate bits over scan
/// positions 0..last_pos. An all-zero block costs 0 bits.
/// Throws std::logic_error when a non-zero index sits beyond last_pos.
double block_actual_bits(std::span<const long long> indices_scan_order, int last_pos,
                         int rice_g, double r_cbf, const LastPosTable& lp);

/// Ordinary least squares over regressors (1, L0, L1, R_LP) via Householder
/// QR. Requires at least 4 observations; throws fit_error on a rank-deficient
/// design, naming the collinear column.
FitReport fit_rate_params(std::span<const BlockRateObservation> observations);

} // namespace tcq

#endif
