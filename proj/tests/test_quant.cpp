#include <doctest.h>

#include <array>
#include <cmath>

#include "tcq/errors.hpp"
#include "tcq/quant.hpp"
#include "support/helpers.hpp"

using namespace tcq;

TEST_CASE("scalar_quantize") {
    CHECK(scalar_quantize(3.7, 1.0, 0.5) == 4);
    CHECK(scalar_quantize(-3.2, 1.0, 0.5) == -3);
    CHECK(scalar_quantize(0.0, 2.0, 0.5) == 0);

    test::Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double c = rng.uniform(-50.0, 50.0);
        const double q = rng.uniform(0.1, 10.0);
        const double f = rng.uniform(0.0, 0.999);
        CHECK(scalar_quantize(c, q, f) == -scalar_quantize(-c, q, f)); // odd symmetry
    }
}

TEST_CASE("next_state matches the hand-derived transition table") {
    // Fixture derived by evaluating (32040 >> ((st << 2) + (parity << 1))) & 3
    // by hand for all eight inputs.
    constexpr std::array<std::array<int, 2>, 4> fixture = {{{0, 2}, {2, 0}, {1, 3}, {3, 1}}};
    for (int st = 0; st < 4; ++st)
        for (int parity = 0; parity < 2; ++parity)
            CHECK(next_state(st, parity) ==
                  fixture[static_cast<std::size_t>(st)][static_cast<std::size_t>(parity)]);
    CHECK_THROWS_AS(next_state(kUncoded, 0), std::logic_error);
}

TEST_CASE("reconstruct_level") {
    CHECK(reconstruct_level(3, 2) == 5);
    CHECK(reconstruct_level(0, 0) == 0);
    CHECK(reconstruct_level(0, 3) == 0);
    CHECK(reconstruct_level(-2, 3) == -3);

    // Even levels from quantizer 0, odd levels from quantizer 1.
    for (long long idx = -8; idx <= 8; ++idx) {
        if (idx == 0) continue;
        for (int st = 0; st < 4; ++st) {
            const long long level = reconstruct_level(idx, st);
            CHECK((level % 2 == 0) == ((st >> 1) == 0));
        }
    }
}

TEST_CASE("branch_distortion") {
    CHECK(branch_distortion(2.0, 1, 0, 1.0) == doctest::Approx(0.0));
    CHECK(branch_distortion(2.6, 1, 2, 1.0) == doctest::Approx(2.56));
    CHECK(branch_distortion(-0.4, 0, 1, 1.0) == doctest::Approx(0.16));
}

TEST_CASE("dequantize_block replays the reconstruction machine") {
    // Indices from the highest scan position downward.
    const std::array<long long, 3> indices = {1, 0, 2};
    const DequantResult dec = dequantize_block(indices, 1.0);
    CHECK(dec.states == std::vector<int>{0, 2, 1});
    CHECK(dec.levels == std::vector<long long>{2, 0, 4});
    CHECK(dec.recon == std::vector<double>{2.0, 0.0, 4.0});

    const std::array<long long, 4> zeros = {0, 0, 0, 0};
    const DequantResult z = dequantize_block(zeros, 3.0);
    CHECK(z.levels == std::vector<long long>{0, 0, 0, 0});
    CHECK(z.final_state == 0);

    // Pure function: equal inputs give equal outputs.
    const DequantResult again = dequantize_block(indices, 1.0);
    CHECK(again.levels == dec.levels);
    CHECK(again.states == dec.states);
}

TEST_CASE("diagonal_scan") {
    const ScanTable t22 = diagonal_scan(2, 2);
    CHECK(t22.xy(0) == std::pair<int, int>{0, 0});
    CHECK(t22.xy(1) == std::pair<int, int>{0, 1});
    CHECK(t22.xy(2) == std::pair<int, int>{1, 0});
    CHECK(t22.xy(3) == std::pair<int, int>{1, 1});

    // Single row: scan order equals raster order.
    const ScanTable t14 = diagonal_scan(4, 1);
    for (int s = 0; s < 4; ++s) CHECK(t14.scan_to_raster[static_cast<std::size_t>(s)] == s);

    for (const auto [w, h] : {std::pair{16, 16}, std::pair{8, 2}, std::pair{1, 6}}) {
        const ScanTable t = diagonal_scan(w, h);
        for (int r = 0; r < w * h; ++r)
            CHECK(t.scan_to_raster[static_cast<std::size_t>(
                      t.raster_to_scan[static_cast<std::size_t>(r)])] == r);
    }
    CHECK_THROWS_AS(diagonal_scan(0, 4), config_error);
    CHECK_THROWS_AS(diagonal_scan(4, 40), config_error);
}

TEST_CASE("qp to q_step mapping and config invariant") {
    CHECK(q_step_from_qp(4) == doctest::Approx(1.0));
    CHECK(q_step_from_qp(22) == doctest::Approx(8.0));
    CHECK(q_step_from_qp(28) == doctest::Approx(16.0));
    for (const int qp : {22, 27, 32, 37}) {
        const QuantConfig cfg = make_quant_config(qp);
        CHECK(std::fabs(cfg.lambda_rd - cfg.phi * cfg.q_step * cfg.q_step) <=
              1e-12 * cfg.lambda_rd);
    }
}
