#include <doctest.h>

#include <cmath>
#include <vector>

#include "tcq/errors.hpp"
#include "tcq/laplace.hpp"
#include "tcq/trellis.hpp"
#include "support/helpers.hpp"

using namespace tcq;

namespace {

QuantConfig unit_config(double lambda = 0.0897) {
    QuantConfig cfg;
    cfg.q_step = 1.0;
    cfg.lambda_rd = lambda;
    cfg.phi = lambda;
    return cfg;
}

SearchOptions surrogate_opts() {
    SearchOptions o;
    o.rate_mode = RateMode::kSurrogate;
    return o;
}

} // namespace

TEST_CASE("build_candidates follows the offset sets") {
    auto levels = [](const CandidateSet& s) {
        return std::vector<long long>(s.levels.begin(), s.levels.begin() + s.count);
    };
    CHECK(levels(build_candidates(0.2, 1.0)) == std::vector<long long>{0, 1, 2, 3, 4});
    CHECK(levels(build_candidates(5.3, 1.0)) == std::vector<long long>{0, 3, 4, 5, 6});
    CHECK(levels(build_candidates(2.4, 1.0)) == std::vector<long long>{0, 1, 2, 3, 4});
}

TEST_CASE("rd_cost") {
    CHECK(rd_cost(0.0, 0.0, 0.5) == 0.0);
    CHECK(rd_cost(2.56, 5.0, 0.0897) == doctest::Approx(3.0085));
    CHECK(rd_cost(7.25, 100.0, 0.0) == 7.25);
    CHECK_THROWS_AS(rd_cost(1.0, 1.0, -0.1), std::domain_error);
}

TEST_CASE("all-zero block") {
    const Block b = test::make_block(2, 2, {0.0, 0.0, 0.0, 0.0});
    const TrellisResult r = tcq_search(b, unit_config(), surrogate_opts());
    CHECK(r.indices == std::vector<long long>{0, 0, 0, 0});
    CHECK(r.total_bits == 0.0);
    CHECK(r.total_cost == 0.0);
    CHECK(r.last_pos == kNoLastPos);
    CHECK(r.counters.stages == 0);
}

TEST_CASE("1x4 example equals the exhaustive oracle") {
    const Block b = test::make_block(4, 1, {4.6, 0.1, 0.0, 0.05});
    const QuantConfig cfg = unit_config(0.0897);
    const TrellisResult fast = tcq_search(b, cfg, surrogate_opts());
    const TrellisResult slow = brute_force_search(b, cfg, surrogate_opts());
    CHECK(fast.total_cost == doctest::Approx(slow.total_cost).epsilon(1e-9));
    CHECK(fast.indices == slow.indices);
    CHECK(fast.total_cost > 0.0);
}

TEST_CASE("single-coefficient blocks equal the oracle") {
    test::Rng rng(0xBEEF);
    for (int i = 0; i < 50; ++i) {
        const Block b = test::make_block(1, 1, {rng.uniform(-30.0, 30.0)});
        const QuantConfig cfg = unit_config(rng.uniform(0.0, 3.0));
        const TrellisResult fast = tcq_search(b, cfg, surrogate_opts());
        const TrellisResult slow = brute_force_search(b, cfg, surrogate_opts());
        CHECK(fast.total_cost == doctest::Approx(slow.total_cost).epsilon(1e-9));
    }
}

TEST_CASE("below-half-step 1x6 block codes as all-zero") {
    const Block b = test::make_block(6, 1, {0.4, -0.3, 0.2, 0.45, -0.1, 0.49});
    const TrellisResult r = tcq_search(b, unit_config(), surrogate_opts());
    CHECK(r.last_pos == kNoLastPos);
    CHECK(r.total_bits == 0.0);
    const TrellisResult slow = brute_force_search(b, unit_config(), surrogate_opts());
    CHECK(slow.last_pos == kNoLastPos);
    CHECK(r.total_cost == doctest::Approx(slow.total_cost).epsilon(1e-12));
}

TEST_CASE("viterbi equals brute force on random 2x2 draws") {
    for (const int qp : {22, 37}) {
        const QuantConfig cfg = make_quant_config(qp);
        RateModelParams params{2.0, 1.0, 1.0, 0.5};
        for (const RateMode mode : {RateMode::kSurrogate, RateMode::kLinearModel}) {
            SearchOptions opts;
            opts.rate_mode = mode;
            opts.params = &params;
            for (int i = 0; i < 50; ++i) {
                const Block b = sample_block(2.0 * cfg.q_step, 2, 2,
                                             derive_seed(1234 + qp, static_cast<unsigned>(i)));
                const TrellisResult fast = tcq_search(b, cfg, opts);
                const TrellisResult slow = brute_force_search(b, cfg, opts);
                CHECK(fast.total_cost ==
                      doctest::Approx(slow.total_cost).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("cost decomposition recomputed from returned indices") {
    for (const int qp : {22, 32}) {
        const QuantConfig cfg = make_quant_config(qp);
        for (int i = 0; i < 30; ++i) {
            const Block b =
                sample_block(3.0 * cfg.q_step, 4, 4, derive_seed(777, static_cast<unsigned>(i)));
            const TrellisResult r = tcq_search(b, cfg, surrogate_opts());
            const auto rc = test::recompute_cost(b, cfg, r, RateMode::kSurrogate, 0, nullptr);
            CHECK(r.total_distortion == doctest::Approx(rc.distortion).epsilon(1e-9));
            CHECK(r.total_bits == doctest::Approx(rc.bits).epsilon(1e-9));
            const double j = rc.distortion + cfg.lambda_rd * rc.bits;
            CHECK(std::fabs(r.total_cost - j) <= 1e-9 * std::max(1.0, std::fabs(j)));
        }
    }
}

TEST_CASE("decoder replay reproduces the recorded states") {
    const QuantConfig cfg = make_quant_config(27);
    for (int i = 0; i < 40; ++i) {
        const Block b =
            sample_block(2.5 * cfg.q_step, 8, 2, derive_seed(31337, static_cast<unsigned>(i)));
        const TrellisResult r = tcq_search(b, cfg, surrogate_opts());
        if (r.last_pos < 0) continue;
        std::vector<long long> high_to_low;
        for (int p = r.last_pos; p >= 0; --p)
            high_to_low.push_back(r.indices[static_cast<std::size_t>(p)]);
        const DequantResult dec = dequantize_block(high_to_low, cfg.q_step);
        for (int p = r.last_pos; p >= 0; --p)
            CHECK(dec.states[static_cast<std::size_t>(r.last_pos - p)] ==
                  r.states[static_cast<std::size_t>(p)]);
    }
}

TEST_CASE("counter ledger matches Table-style formulas without pruning") {
    const QuantConfig cfg = make_quant_config(22);
    int middle_stages_seen = 0;
    for (int i = 0; i < 20; ++i) {
        const Block b =
            sample_block(4.0 * cfg.q_step, 4, 4, derive_seed(555, static_cast<unsigned>(i)));
        const TrellisResult r = tcq_search(b, cfg, surrogate_opts());
        const OpCounters& c = r.counters;

        // Totals equal the per-stage sums.
        std::uint64_t br = 0, de = 0, re = 0, ad = 0, cm = 0, se = 0;
        for (const auto& s : c.per_stage) {
            br += s.branches;
            de += s.dist_evals;
            re += s.rate_evals;
            ad += s.adds;
            cm += s.compares;
            se += s.selects;
        }
        CHECK(br == c.branches);
        CHECK(de == c.dist_evals);
        CHECK(re == c.rate_evals);
        CHECK(ad == c.adds);
        CHECK(cm == c.compares);
        CHECK(se == c.selects);
        CHECK(c.compares == c.selects);
        CHECK(c.per_stage.size() == c.stages);

        for (std::size_t s = 0; s < c.per_stage.size(); ++s) {
            const StageCounters& st = c.per_stage[s];
            if (st.active_nodes == 5) {
                ++middle_stages_seen;
                CHECK(st.branches == 15);
                CHECK(st.dist_evals == 5);
                CHECK(st.rate_evals == 5);
                CHECK(st.adds == 15);
                CHECK(st.compares == 10);
                CHECK(st.selects == 10);
            }
        }
        // The trellis ramps up: one active node, then three, then all five.
        if (c.stages >= 3) {
            CHECK(c.per_stage[0].active_nodes == 1);
            CHECK(c.per_stage[0].branches == 3);
            CHECK(c.per_stage[1].active_nodes == 3);
            CHECK(c.per_stage[1].branches == 9);
            CHECK(c.per_stage[2].active_nodes == 5);
        }
    }
    CHECK(middle_stages_seen > 0);
}

TEST_CASE("increasing lambda never increases the chosen bits") {
    for (int i = 0; i < 10; ++i) {
        const Block b = sample_block(6.0, 4, 4, derive_seed(246, static_cast<unsigned>(i)));
        QuantConfig cfg;
        cfg.q_step = 2.0;
        double prev_bits = 1e300;
        for (const double phi : {0.0, 0.02, 0.0897, 0.4, 2.0, 10.0}) {
            cfg.phi = phi;
            cfg.lambda_rd = phi * cfg.q_step * cfg.q_step;
            const TrellisResult r = tcq_search(b, cfg, surrogate_opts());
            CHECK(r.total_bits <= prev_bits + 1e-9);
            prev_bits = r.total_bits;
        }
    }
}

TEST_CASE("lambda zero reduces to distortion minimization") {
    const Block b = test::make_block(4, 1, {3.3, -1.7, 0.6, 2.2});
    QuantConfig cfg = unit_config(0.0);
    const TrellisResult r = tcq_search(b, cfg, surrogate_opts());
    const TrellisResult slow = brute_force_search(b, cfg, surrogate_opts());
    CHECK(r.total_cost == doctest::Approx(r.total_distortion));
    CHECK(r.total_cost == doctest::Approx(slow.total_cost).epsilon(1e-12));
}

TEST_CASE("brute force guard") {
    const Block big = sample_block(8.0, 4, 4, 9); // 5^16 combinations
    CHECK_THROWS_AS(brute_force_search(big, unit_config(), surrogate_opts()), size_error);
}

TEST_CASE("rate mode validation") {
    const Block b = test::make_block(2, 2, {1.0, 2.0, 3.0, 4.0});
    SearchOptions opts;
    opts.rate_mode = RateMode::kLinearModel;
    opts.params = nullptr;
    CHECK_THROWS_AS(tcq_search(b, unit_config(), opts), config_error);
    opts.rate_mode = RateMode::kSurrogate;
    opts.rice_g = 9;
    CHECK_THROWS_AS(tcq_search(b, unit_config(), opts), config_error);
}

TEST_CASE("hdq_quantize") {
    const Block b = test::make_block(2, 1, {0.6, 0.4});
    const HdqResult r = hdq_quantize(b, unit_config());
    CHECK(r.levels == std::vector<long long>{1, 0});
    CHECK(r.last_pos == 0);
    CHECK(r.l0 == 1);
    CHECK(r.l1 == 1);

    const Block z = test::make_block(2, 2, {0.0, 0.0, 0.0, 0.0});
    const HdqResult rz = hdq_quantize(z, unit_config());
    CHECK(rz.last_pos == kNoLastPos);
    CHECK(rz.l0 == 0);
}

TEST_CASE("median TCQ last position sits at or below HDQ's") {
    const QuantConfig cfg = make_quant_config(37);
    std::vector<int> hdq_last, tcq_last;
    for (int i = 0; i < 60; ++i) {
        const Block b =
            sample_block(2.0 * cfg.q_step, 8, 8, derive_seed(4242, static_cast<unsigned>(i)));
        hdq_last.push_back(hdq_quantize(b, cfg).last_pos);
        tcq_last.push_back(tcq_search(b, cfg, surrogate_opts()).last_pos);
    }
    std::sort(hdq_last.begin(), hdq_last.end());
    std::sort(tcq_last.begin(), tcq_last.end());
    CHECK(tcq_last[30] <= hdq_last[30]);
}
