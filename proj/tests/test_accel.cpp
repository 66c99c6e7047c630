#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tcq/accel.hpp"
#include "tcq/laplace.hpp"
#include "tcq/rate_model.hpp"
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

bool same_result(const TrellisResult& a, const TrellisResult& b) {
    return a.indices == b.indices && a.states == b.states && a.total_cost == b.total_cost &&
           a.total_bits == b.total_bits && a.total_distortion == b.total_distortion &&
           a.last_pos == b.last_pos && a.counters.branches == b.counters.branches &&
           a.counters.stages == b.counters.stages &&
           a.counters.compares == b.counters.compares;
}

} // namespace

TEST_CASE("departure_threshold") {
    RateModelParams params{1.0, 2.0, 0.0, 0.0};
    DepartureConfig bound;
    bound.mode = DepartureMode::kBound;
    bound.k_factor = 2.0;
    CHECK(departure_threshold(1.0, bound, params, 1, 0.0) == doctest::Approx(2.0));
    bound.k_factor = 2.5;
    CHECK(departure_threshold(1.0, bound, params, 1, 0.0) == doctest::Approx(2.5));

    CHECK(analytic_k_factor(0.25, 1.0, 2.0) == doctest::Approx(0.625));

    DepartureConfig exact;
    exact.mode = DepartureMode::kExact;
    exact.phi = 0.0897;
    CHECK_THROWS_AS(departure_threshold(1.0, exact, params, 0, 0.0), std::domain_error);

    // At |C| equal to the exact threshold the drop is cost-neutral.
    QuantConfig cfg = unit_config(0.0897);
    for (const long long l : {1LL, 2LL, 5LL}) {
        const double t = departure_threshold(cfg.q_step, exact, params, l, 0.0);
        const double dj = departure_delta_j(t, l, params, cfg, 0.0, 0.0);
        CHECK(std::fabs(dj) < 1e-12);
    }
}

TEST_CASE("find_departure_point walks the contiguous tail") {
    const QuantConfig cfg = unit_config();
    const Block b = test::make_block(4, 1, {5.0, 0.3, 1.1, 0.6});
    CHECK(find_departure_point(b, cfg, 2.0) == 0);
    CHECK(find_departure_point(b, cfg, 0.0) == 3); // last non-zero pre-quant, no postponement
    CHECK(find_departure_point(b, cfg, 10.0) == kNoLastPos);
    CHECK_THROWS_AS(find_departure_point(b, cfg, -1.0), std::domain_error);

    // A large coefficient shields everything below it.
    const Block c = test::make_block(4, 1, {0.7, 6.0, 0.8, 1.2});
    CHECK(find_departure_point(c, cfg, 2.0) == 1);
}

TEST_CASE("delta_distortion") {
    CHECK(delta_distortion(0.3, 0, 1, 1.0) == doctest::Approx(-0.4));
    CHECK(delta_distortion(2.5, 2, 1, 1.0) == doctest::Approx(0.0));
    CHECK(delta_distortion(7.0, 7, 0, 1.0) == 0.0);

    // Delta 0 is the unique integer maximum away from bin midpoints.
    test::Rng rng(2024);
    for (int i = 0; i < 400; ++i) {
        const double q = rng.uniform(0.5, 8.0);
        const double c = rng.uniform(0.0, 30.0);
        const long long l = scalar_quantize(c, q, 0.5);
        const double mid_lo = (static_cast<double>(l) - 0.5) * q;
        const double mid_hi = (static_cast<double>(l) + 0.5) * q;
        if (std::fabs(c - mid_lo) < 1e-9 || std::fabs(c - mid_hi) < 1e-9) continue;
        for (long long dl = -3; dl <= 3; ++dl) {
            if (dl == 0) continue;
            CHECK(delta_distortion(c, l, dl, q) < 0.0);
        }
    }
}

TEST_CASE("delta_rate_linear") {
    const RateModelParams p{1.0, 0.5, 0.0, 0.0};
    CHECK(delta_rate_linear(0, 0, p) == 0.0);
    CHECK(delta_rate_linear(0, 2, p) == doctest::Approx(-2.0));
    CHECK(delta_rate_linear(3, 0, p) == doctest::Approx(2.5));
}

TEST_CASE("departure_delta_j") {
    const RateModelParams p{1.0, 2.0, 0.0, 0.0};
    const QuantConfig cfg = unit_config(0.0897);
    CHECK(departure_delta_j(0.6, 1, p, cfg, 0.0, 0.0) == doctest::Approx(-0.0691));
    CHECK(departure_delta_j(0.9, 1, p, cfg, 0.0, 0.0) == doctest::Approx(0.5309));
    CHECK_THROWS_AS(departure_delta_j(0.6, 0, p, cfg, 0.0, 0.0), std::domain_error);
}

TEST_CASE("pairwise departure safety under the linear model") {
    // Build the two block costs of the i/j pair explicitly and check that
    // their difference equals the closed-form delta, so delta <= 0 certifies
    // J(drop i) <= J(keep i as last).
    const RateModelParams p{1.7, 0.9, 0.35, 0.2};
    test::Rng rng(31);
    int droppable_seen = 0;
    for (int iter = 0; iter < 2000; ++iter) {
        QuantConfig cfg;
        cfg.q_step = rng.uniform(0.25, 8.0);
        cfg.phi = rng.uniform(0.02, 0.5);
        cfg.lambda_rd = cfg.phi * cfg.q_step * cfg.q_step;

        const double c_i = rng.uniform(0.5 * cfg.q_step, 6.0 * cfg.q_step);
        const long long l_i = scalar_quantize(c_i, cfg.q_step, 0.5);
        if (l_i < 1) continue;
        const long long idx_i = (l_i + 1) / 2;
        const double r_lp_i = rng.uniform(4.0, 12.0);
        const double r_lp_j = rng.uniform(2.0, r_lp_i);

        // Shared remainder of the block: distortion S_d, norms (S_l0, S_l1).
        const double s_d = rng.uniform(0.0, 50.0);
        const double s_l0 = std::floor(rng.uniform(1.0, 10.0));
        const double s_l1 = s_l0 + std::floor(rng.uniform(0.0, 20.0));

        const double err_i = c_i - static_cast<double>(l_i) * cfg.q_step;
        const double j_keep =
            s_d + err_i * err_i +
            cfg.lambda_rd * block_rate_estimate(s_l0 + 1.0,
                                                s_l1 + static_cast<double>(idx_i), r_lp_i, p);
        const double j_drop =
            s_d + c_i * c_i + cfg.lambda_rd * block_rate_estimate(s_l0, s_l1, r_lp_j, p);

        const double dj = departure_delta_j(c_i, l_i, p, cfg, r_lp_i, r_lp_j);
        CHECK(j_drop - j_keep == doctest::Approx(dj).epsilon(1e-9));
        if (dj <= 0.0) {
            ++droppable_seen;
            CHECK(j_drop <= j_keep + 1e-9);
        }
        const DepartureConfig exact{DepartureMode::kExact, 0.0, cfg.phi};
        const double t =
            departure_threshold(cfg.q_step, exact, p, l_i, r_lp_i - r_lp_j);
        if (std::fabs(c_i - t) > 1e-9 * std::max(1.0, t))
            CHECK((c_i <= t) == (dj <= 0.0));
    }
    CHECK(droppable_seen > 0);
}

TEST_CASE("prune_candidates cases") {
    auto levels = [](const CandidateSet& s) {
        return std::vector<long long>(s.levels.begin(), s.levels.begin() + s.count);
    };

    const PruneDecision c1 = prune_candidates(build_candidates(0.2, 1.0), 0);
    CHECK(c1.case_id == 1);
    CHECK(levels(c1.kept) == std::vector<long long>{0, 1, 2});
    CHECK(levels(c1.dropped) == std::vector<long long>{3, 4});

    const PruneDecision c2 = prune_candidates(build_candidates(2.4, 1.0), 2);
    CHECK(c2.case_id == 2);
    CHECK(levels(c2.kept) == std::vector<long long>{0, 1, 2});
    CHECK(levels(c2.dropped) == std::vector<long long>{3, 4});

    const PruneDecision c3 = prune_candidates(build_candidates(5.3, 1.0), 5);
    CHECK(c3.case_id == 3);
    CHECK(levels(c3.kept) == std::vector<long long>{3, 4, 5, 6});
    CHECK(levels(c3.dropped) == std::vector<long long>{0});
    CHECK(c3.kept.contains(5)); // the pre-quantized level always survives

    CHECK_THROWS_AS(prune_candidates(build_candidates(5.3, 1.0), 2), std::logic_error);
}

TEST_CASE("prune_case_for matches the level-based discrimination") {
    test::Rng rng(88);
    for (int i = 0; i < 2000; ++i) {
        const double q = rng.uniform(0.1, 20.0);
        const double c = rng.uniform(0.0, 100.0);
        const long long l = scalar_quantize(c, q, 0.5);
        const int expected = l == 0 ? 1 : (l <= 2 ? 2 : 3);
        CHECK(prune_case_for(c, q) == expected);
    }
}

TEST_CASE("case-1 dominance: dropped candidates never improve rate or distortion") {
    test::Rng rng(0xD0);
    for (int i = 0; i < 2000; ++i) {
        const double q = rng.uniform(0.05, 50.0);
        const double c = rng.uniform(0.0, 0.4999) * q; // pre-quantizes to zero
        const RateModelParams p{rng.uniform(0.01, 5.0), rng.uniform(0.01, 5.0), 0.0, 0.0};
        const PruneDecision d = prune_candidates(build_candidates(c, q), 0);
        REQUIRE(d.case_id == 1);
        for (int k = 0; k < d.dropped.count; ++k) {
            const long long level = d.dropped.levels[k];
            const long long idx = (level + 1) / 2;
            CHECK(delta_distortion(c, 0, level, q) <= 0.0);
            CHECK(delta_rate_linear(0, idx, p) <= 0.0);
        }
    }
}

TEST_CASE("disabled accelerations reproduce the plain search bit for bit") {
    const RateModelParams params{2.0, 1.0, 1.0, 0.5};
    for (const int qp : {22, 37}) {
        const QuantConfig cfg = make_quant_config(qp);
        DepartureConfig dep;
        dep.mode = DepartureMode::kBound;
        dep.k_factor = 0.0;
        dep.phi = cfg.phi;
        for (int i = 0; i < 25; ++i) {
            const Block b = sample_block(2.0 * cfg.q_step, 4, 4,
                                         derive_seed(999 + qp, static_cast<unsigned>(i)));
            const TrellisResult full = tcq_search(b, cfg, surrogate_opts());
            const TrellisResult accel =
                accelerated_search(b, cfg, surrogate_opts(), dep, params, false);
            CHECK(same_result(full, accel));
        }
    }
}

TEST_CASE("pruning keeps middle stages inside the 10..15 branch band") {
    const QuantConfig cfg = make_quant_config(27);
    const RateModelParams params{2.0, 1.0, 1.0, 0.5};
    DepartureConfig dep;
    SUBCASE("pruning alone") { dep.k_factor = 0.0; }
    SUBCASE("combined with the analytic departure bound") {
        dep.k_factor = analytic_k_factor(cfg.phi, params.alpha, params.beta);
        dep.phi = cfg.phi;
    }
    int case12_stages = 0, case3_stages = 0;
    for (int i = 0; i < 30; ++i) {
        const Block b =
            sample_block(3.0 * cfg.q_step, 4, 4, derive_seed(321, static_cast<unsigned>(i)));
        const TrellisResult r = accelerated_search(b, cfg, surrogate_opts(), dep, params, true);
        const ScanTable scan = diagonal_scan(4, 4);
        for (const auto& st : r.counters.per_stage) {
            if (st.active_nodes != 5) continue;
            CHECK(st.branches >= 10);
            CHECK(st.branches <= 15);
            const double c_abs = std::fabs(
                b.coeffs[static_cast<std::size_t>(scan.scan_to_raster[st.scan_pos])]);
            if (prune_case_for(c_abs, cfg.q_step) <= 2) {
                CHECK(st.branches == 10);
                ++case12_stages;
            } else {
                ++case3_stages;
            }
            CHECK(st.dist_evals >= 3);
            CHECK(st.dist_evals <= 5);
            CHECK(st.rate_evals >= 3);
            CHECK(st.rate_evals <= 5);
        }
    }
    CHECK(case12_stages > 0);
    CHECK(case3_stages > 0);
}

TEST_CASE("accelerated counters never exceed the full search") {
    const QuantConfig cfg = make_quant_config(32);
    const RateModelParams params{2.0, 1.0, 1.0, 0.5};
    DepartureConfig dep;
    dep.k_factor = 2.0;
    dep.phi = cfg.phi;
    for (int i = 0; i < 30; ++i) {
        const Block b =
            sample_block(3.0 * cfg.q_step, 8, 8, derive_seed(654, static_cast<unsigned>(i)));
        const TrellisResult full = tcq_search(b, cfg, surrogate_opts());
        const TrellisResult accel =
            accelerated_search(b, cfg, surrogate_opts(), dep, params, true);
        CHECK(accel.counters.branches <= full.counters.branches);
        CHECK(accel.counters.dist_evals <= full.counters.dist_evals);
        CHECK(accel.counters.rate_evals <= full.counters.rate_evals);
        CHECK(accel.counters.adds <= full.counters.adds);
        CHECK(accel.counters.compares <= full.counters.compares);
        CHECK(accel.counters.selects <= full.counters.selects);
        CHECK(accel.counters.stages <= full.counters.stages);
        CHECK(accel.total_cost >= full.total_cost - 1e-9 * std::fabs(full.total_cost));
        // The truncated result still decodes.
        const auto rc = test::recompute_cost(b, cfg, accel, RateMode::kSurrogate, 0, nullptr);
        CHECK(accel.total_distortion == doctest::Approx(rc.distortion).epsilon(1e-9));
    }
}

TEST_CASE("risky threshold saves at least as much as safe and costs at least as much") {
    const QuantConfig cfg = make_quant_config(32);
    const RateModelParams params{2.0, 1.0, 1.0, 0.5};
    DepartureConfig safe{DepartureMode::kBound, 2.0, cfg.phi};
    DepartureConfig risky{DepartureMode::kBound, 2.5, cfg.phi};
    for (int i = 0; i < 30; ++i) {
        const Block b =
            sample_block(4.0 * cfg.q_step, 8, 8, derive_seed(987, static_cast<unsigned>(i)));
        const TrellisResult rs = accelerated_search(b, cfg, surrogate_opts(), safe, params, false);
        const TrellisResult rr = accelerated_search(b, cfg, surrogate_opts(), risky, params, false);
        CHECK(rr.counters.branches <= rs.counters.branches);
        CHECK(rr.total_cost >= rs.total_cost - 1e-9 * std::fabs(rs.total_cost));
    }
}
