#ifndef TCQ_LAPLACE_HPP
#define TCQ_LAPLACE_HPP

#include <cstdint>

#include "tcq/quant.hpp"

namespace tcq {

/// Laplacian coefficient source, pdf p(x) = (L/2) * exp(-L*|x|) with
/// scale L = sqrt(2) / sigma.
struct LaplacianParams {
    double sigma;      // standard deviation, > 0
    double lambda_lap; // sqrt(2) / sigma
};

/// Laplacian scale from the coefficient standard deviation.
/// Throws std::domain_error for sigma <= 0.
double lambda_from_sigma(double sigma);

LaplacianParams laplacian_from_sigma(double sigma);

/// Closed-form per-coefficient statistics of hard-decision quantization at
/// rounding offset f = 1/2.
///
/// tau        = exp(-lambda * q_step / 2), also the non-zero probability
/// d_zero     = dead-zone distortion  -q/2 * tau + (1 - tau) / lambda
/// d_nonzero  =  q/2 * tau + tau^2 * (2 - tau - 1/tau) / ((1 - tau^2) * lambda)
/// d_expected = d_zero + d_nonzero
/// r0_hat     = log2((1 + p_nz) / (1 - p_nz)) bits
struct ClosedFormStats {
    double tau;
    double p_nz;
    double d_zero;
    double d_nonzero;
    double d_expected;
    double r0_hat;
};

ClosedFormStats closed_form_stats(double lambda_lap, double q_step);

/// Rate from the non-zero probability. Order 0 is the exact logarithm;
/// orders 1..3 keep the first odd Taylor terms (2/ln2) * (p + p^3/3 + p^5/5).
double rate_from_pnz(double p_nz, int taylor_order);

/// Self-information of a scalar quantized symbol, in bits.
/// level == 0: -log2(1 - tau); level != 0: beta1 * |level| + b1 with
/// beta1 = lambda * q_step * log2(e) and
/// b1 = 1 - log2(exp(lambda*q/2) - exp(-lambda*q/2)).
double self_info_rate(long long level, double lambda_lap, double q_step);

/// Deterministic pseudo-random Laplacian block: inverse-CDF transform of a
/// counter-based uniform stream. Identical (sigma, dims, seed) gives a
/// bit-identical block on every platform.
Block sample_block(double sigma, int width, int height, std::uint64_t seed);

} // namespace tcq

#endif
