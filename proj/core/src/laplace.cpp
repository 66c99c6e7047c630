#include "tcq/laplace.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tcq/errors.hpp"
#include "tcq/prng.hpp"

namespace tcq {

double lambda_from_sigma(double sigma) {
    if (!(sigma > 0.0))
        throw std::domain_error("lambda_from_sigma: sigma must be > 0, got " +
                                std::to_string(sigma));
    return std::sqrt(2.0) / sigma;
}

LaplacianParams laplacian_from_sigma(double sigma) {
    return {sigma, lambda_from_sigma(sigma)};
}

ClosedFormStats closed_form_stats(double lambda_lap, double q_step) {
    if (!(lambda_lap > 0.0) || !(q_step > 0.0))
        throw std::domain_error("closed_form_stats: lambda_lap and q_step must be > 0");

    ClosedFormStats s{};
    const double tau = std::exp(-0.5 * lambda_lap * q_step);
    s.tau = tau;
    s.p_nz = tau;
    s.d_zero = -0.5 * q_step * tau + (1.0 - tau) / lambda_lap;
    s.d_nonzero = 0.5 * q_step * tau +
                  tau * tau * (2.0 - tau - 1.0 / tau) / ((1.0 - tau * tau) * lambda_lap);
    s.d_expected = s.d_zero + s.d_nonzero;
    s.r0_hat = rate_from_pnz(s.p_nz, 0);
    return s;
}

double rate_from_pnz(double p_nz, int taylor_order) {
    if (!(p_nz >= 0.0) || p_nz >= 1.0)
        throw std::domain_error("rate_from_pnz: p_nz must be in [0, 1), got " +
                                std::to_string(p_nz));
    if (taylor_order < 0 || taylor_order > 3)
        throw std::domain_error("rate_from_pnz: taylor_order must be 0..3");

    if (taylor_order == 0)
        return std::log2((1.0 + p_nz) / (1.0 - p_nz));

    // Truncated series (2/ln2) * (p + p^3/3 + p^5/5 + ...), all terms positive.
    const double scale = 2.0 / std::log(2.0);
    double sum = 0.0;
    double power = p_nz;
    const double p2 = p_nz * p_nz;
    for (int k = 0; k < taylor_order; ++k) {
        sum += power / static_cast<double>(2 * k + 1);
        power *= p2;
    }
    return scale * sum;
}

double self_info_rate(long long level, double lambda_lap, double q_step) {
    if (!(lambda_lap > 0.0) || !(q_step > 0.0))
        throw std::domain_error("self_info_rate: lambda_lap and q_step must be > 0");

    const double lq = lambda_lap * q_step;
    if (level == 0)
        return -std::log2(1.0 - std::exp(-0.5 * lq));

    const double beta1 = lq * std::log2(std::exp(1.0));
    const double b1 = 1.0 - std::log2(std::exp(0.5 * lq) - std::exp(-0.5 * lq));
    return beta1 * static_cast<double>(level < 0 ? -level : level) + b1;
}

Block sample_block(double sigma, int width, int height, std::uint64_t seed) {
    if (!(sigma > 0.0))
        throw config_error("sample_block: sigma must be > 0, got " + std::to_string(sigma));
    require_dims(width, height);

    const double scale = sigma / std::sqrt(2.0); // Laplacian b, 1/lambda
    Block block;
    block.width = width;
    block.height = height;
    block.coeffs.resize(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < block.coeffs.size(); ++i) {
        const double u = uniform_open(stream_at(seed, i));
        const double v = u - 0.5; // strictly inside (-1/2, 1/2)
        const double mag = -scale * std::log1p(-2.0 * std::fabs(v));
        block.coeffs[i] = v < 0.0 ? -mag : mag;
    }
    return block;
}

} // namespace tcq
