#include "tcq/rate_model.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tcq/errors.hpp"

namespace tcq {

double rice_bits(long long v, int rice_g) {
    assert(v >= 0 && rice_g >= 0 && rice_g <= 8);
    return static_cast<double>((v >> rice_g) + 1 + rice_g);
}

double surrogate_coeff_bits(long long idx, int rice_g) {
    assert(rice_g >= 0 && rice_g <= 8);
    if (idx == 0) return 1.0;
    const long long mag = idx < 0 ? -idx : idx;
    return 1.0 + 1.0 + rice_bits(mag - 1, rice_g);
}

namespace {

// Group index of one last-position coordinate.
int coord_group(int c) {
    if (c < 4) return c;
    const int msb = 31 - __builtin_clz(static_cast<unsigned>(c));
    return 2 * msb + ((c >> (msb - 1)) & 1);
}

double coord_bits(int c) {
    const int g = coord_group(c);
    const int suffix = (g >> 1) - 1;
    return static_cast<double>(g + 1 + (suffix > 0 ? suffix : 0));
}

} // namespace

double last_pos_bits(int x, int y, int width, int height) {
    if (x < 0 || x >= width || y < 0 || y >= height)
        throw std::domain_error("last_pos_bits: coordinate (" + std::to_string(x) + ", " +
                                std::to_string(y) + ") outside " + std::to_string(width) + "x" +
                                std::to_string(height));
    return coord_bits(x) + coord_bits(y);
}

LastPosTable make_last_pos_table(int width, int height) {
    LastPosTable t;
    t.scan = diagonal_scan(width, height);
    t.bits_by_scan.resize(static_cast<std::size_t>(width) * height);
    for (int s = 0; s < t.scan.size(); ++s) {
        const auto [x, y] = t.scan.xy(s);
        t.bits_by_scan[static_cast<std::size_t>(s)] = last_pos_bits(x, y, width, height);
    }
    return t;
}

double block_rate_estimate(double l0, double l1, double r_lp, const RateModelParams& p) {
    return p.alpha * l0 + p.beta * l1 + p.gamma * r_lp + p.epsilon;
}

Norms count_norms(std::span<const long long> indices) {
    Norms n;
    for (const long long idx : indices) {
        if (idx != 0) ++n.l0;
        n.l1 += idx < 0 ? -idx : idx;
    }
    return n;
}

double block_actual_bits(std::span<const long long> indices_scan_order, int last_pos,
                         int rice_g, double r_cbf, const LastPosTable& lp) {
    for (std::size_t s = static_cast<std::size_t>(last_pos + 1); s < indices_scan_order.size(); ++s)
        if (indices_scan_order[s] != 0)
            throw std::logic_error("block_actual_bits: non-zero index beyond last_pos");
    if (last_pos < 0) return 0.0;

    double bits = r_cbf + lp.at_scan(last_pos);
    for (int s = 0; s <= last_pos; ++s)
        bits += surrogate_coeff_bits(indices_scan_order[static_cast<std::size_t>(s)], rice_g);
    return bits;
}

FitReport fit_rate_params(std::span<const BlockRateObservation> observations) {
    constexpr int kCols = 4;
    static const char* kColNames[kCols] = {"intercept", "l0_norm", "l1_norm", "r_lp"};

    const std::size_t n = observations.size();
    if (n < kCols)
        throw fit_error("fit_rate_params: need at least 4 observations, got " +
                        std::to_string(n));

    // Householder QR on the n x 4 design matrix, y reduced alongside.
    std::vector<double> a(n * kCols);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i * kCols + 0] = 1.0;
        a[i * kCols + 1] = observations[i].l0_norm;
        a[i * kCols + 2] = observations[i].l1_norm;
        a[i * kCols + 3] = observations[i].r_lp;
        y[i] = observations[i].actual_bits;
    }

    double col_scale = 0.0;
    for (std::size_t i = 0; i < n * kCols; ++i) col_scale = std::max(col_scale, std::fabs(a[i]));

    for (int k = 0; k < kCols; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += a[i * kCols + k] * a[i * kCols + k];
        norm = std::sqrt(norm);
        if (norm <= 1e-12 * std::max(1.0, col_scale))
            throw fit_error(std::string("fit_rate_params: rank-deficient design, column '") +
                            kColNames[k] + "' is collinear with earlier columns");

        if (a[k * kCols + k] > 0.0) norm = -norm;
        for (std::size_t i = k; i < n; ++i) a[i * kCols + k] /= -norm;
        a[k * kCols + k] += 1.0;

        for (int j = k + 1; j < kCols; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += a[i * kCols + k] * a[i * kCols + j];
            s = -s / a[k * kCols + k];
            for (std::size_t i = k; i < n; ++i) a[i * kCols + j] += s * a[i * kCols + k];
        }
        double s = 0.0;
        for (std::size_t i = k; i < n; ++i) s += a[i * kCols + k] * y[i];
        s = -s / a[k * kCols + k];
        for (std::size_t i = k; i < n; ++i) y[i] += s * a[i * kCols + k];

        a[k * kCols + k] = norm; // R diagonal, negated Householder convention
    }

    // Back substitution: R beta = Q^T y (upper triangle of a, diag stored above).
    double beta[kCols];
    for (int k = kCols - 1; k >= 0; --k) {
        double s = y[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < kCols; ++j) s -= a[static_cast<std::size_t>(k) * kCols + j] * beta[j];
        beta[k] = s / a[static_cast<std::size_t>(k) * kCols + k];
    }

    FitReport report;
    report.params.epsilon = beta[0];
    report.params.alpha = beta[1];
    report.params.beta = beta[2];
    report.params.gamma = beta[3];
    report.observations = n;

    double mean_y = 0.0;
    for (const auto& ob : observations) mean_y += ob.actual_bits;
    mean_y /= static_cast<double>(n);

    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& ob : observations) {
        const double pred = block_rate_estimate(ob.l0_norm, ob.l1_norm, ob.r_lp, report.params);
        ss_res += (ob.actual_bits - pred) * (ob.actual_bits - pred);
        ss_tot += (ob.actual_bits - mean_y) * (ob.actual_bits - mean_y);
    }
    report.residual_rms = std::sqrt(ss_res / static_cast<double>(n));
    report.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res > 0.0 ? 0.0 : 1.0);
    return report;
}

} // namespace tcq
