#include "tcq/quant.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tcq/errors.hpp"

namespace tcq {

bool dims_supported(int width, int height) noexcept {
    return width >= 1 && width <= 32 && height >= 1 && height <= 32;
}

void require_dims(int width, int height) {
    if (!dims_supported(width, height))
        throw config_error("unsupported block dimensions " + std::to_string(width) + "x" +
                           std::to_string(height) + " (each side must be in 1..32)");
}

double q_step_from_qp(int qp) {
    return std::exp2((static_cast<double>(qp) - 4.0) / 6.0);
}

QuantConfig make_quant_config(int qp, double phi) {
    QuantConfig cfg;
    cfg.qp = qp;
    cfg.q_step = q_step_from_qp(qp);
    cfg.phi = phi;
    cfg.lambda_rd = phi * cfg.q_step * cfg.q_step;
    return cfg;
}

long long scalar_quantize(double c, double q_step, double f_offset) {
    const long long mag = static_cast<long long>(std::floor(std::fabs(c) / q_step + f_offset));
    return c < 0.0 ? -mag : mag;
}

int next_state(int st, int parity) {
    if (st < 0 || st >= kNumCodedStates)
        throw std::logic_error("next_state: state must be a coded state 0..3");
    return (32040 >> ((st << 2) + (parity << 1))) & 3;
}

long long reconstruct_level(long long idx, int st) {
    if (st < 0 || st >= kNumCodedStates)
        throw std::logic_error("reconstruct_level: state must be a coded state 0..3");
    const long long sign = idx > 0 ? 1 : (idx < 0 ? -1 : 0);
    return 2 * idx - static_cast<long long>(st >> 1) * sign;
}

double branch_distortion(double c, long long idx, int st, double q_step) {
    const double rec = q_step * static_cast<double>(reconstruct_level(idx, st));
    const double err = c - rec;
    return err * err;
}

DequantResult dequantize_block(std::span<const long long> indices_high_to_low, double q_step) {
    DequantResult out;
    out.levels.reserve(indices_high_to_low.size());
    out.states.reserve(indices_high_to_low.size());
    out.recon.reserve(indices_high_to_low.size());

    int st = 0;
    for (const long long idx : indices_high_to_low) {
        const long long level = reconstruct_level(idx, st);
        out.levels.push_back(level);
        out.states.push_back(st);
        out.recon.push_back(static_cast<double>(level) * q_step);
        st = next_state(st, static_cast<int>(idx & 1));
    }
    out.final_state = st;
    return out;
}

ScanTable diagonal_scan(int width, int height) {
    require_dims(width, height);

    ScanTable t;
    t.width = width;
    t.height = height;
    t.scan_to_raster.reserve(static_cast<std::size_t>(width) * height);
    t.raster_to_scan.assign(static_cast<std::size_t>(width) * height, -1);

    for (int d = 0; d <= width + height - 2; ++d) {
        for (int y = std::min(d, height - 1); y >= 0; --y) {
            const int x = d - y;
            if (x < 0 || x >= width) continue;
            const int raster = y * width + x;
            t.raster_to_scan[static_cast<std::size_t>(raster)] =
                static_cast<int>(t.scan_to_raster.size());
            t.scan_to_raster.push_back(raster);
        }
    }
    return t;
}

} // namespace tcq
