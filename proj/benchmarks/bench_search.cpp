#include <benchmark/benchmark.h>

#include "tcq/accel.hpp"
#include "tcq/laplace.hpp"
#include "tcq/prng.hpp"
#include "tcq/trellis.hpp"

namespace {

using namespace tcq;

SearchOptions surrogate_opts() {
    SearchOptions o;
    o.rate_mode = RateMode::kSurrogate;
    return o;
}

std::vector<Block> make_blocks(int n, int side, double sigma_rel, const QuantConfig& cfg) {
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        blocks.push_back(sample_block(sigma_rel * cfg.q_step, side, side,
                                      derive_seed(0xBE11C4, static_cast<std::uint64_t>(i))));
    return blocks;
}

void BM_TcqSearch(benchmark::State& state) {
    const QuantConfig cfg = make_quant_config(static_cast<int>(state.range(1)));
    const auto blocks = make_blocks(32, static_cast<int>(state.range(0)), 4.0, cfg);
    const SearchOptions opts = surrogate_opts();
    std::size_t i = 0;
    std::uint64_t branches = 0;
    for (auto _ : state) {
        const TrellisResult r = tcq_search(blocks[i++ % blocks.size()], cfg, opts);
        branches += r.counters.branches;
        benchmark::DoNotOptimize(r.total_cost);
    }
    state.counters["branches"] =
        benchmark::Counter(static_cast<double>(branches), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_TcqSearch)->Args({4, 27})->Args({8, 27})->Args({16, 27})->Args({32, 27});

void BM_AcceleratedSearch(benchmark::State& state) {
    const QuantConfig cfg = make_quant_config(static_cast<int>(state.range(1)));
    const auto blocks = make_blocks(32, static_cast<int>(state.range(0)), 4.0, cfg);
    const SearchOptions opts = surrogate_opts();
    const RateModelParams params{2.0, 1.0, 1.0, 0.5};
    DepartureConfig dep;
    dep.k_factor = 2.0;
    dep.phi = cfg.phi;
    std::size_t i = 0;
    std::uint64_t branches = 0;
    for (auto _ : state) {
        const TrellisResult r =
            accelerated_search(blocks[i++ % blocks.size()], cfg, opts, dep, params, true);
        branches += r.counters.branches;
        benchmark::DoNotOptimize(r.total_cost);
    }
    state.counters["branches"] =
        benchmark::Counter(static_cast<double>(branches), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_AcceleratedSearch)->Args({4, 27})->Args({8, 27})->Args({16, 27})->Args({32, 27});

void BM_BruteForce(benchmark::State& state) {
    const QuantConfig cfg = make_quant_config(27);
    const auto blocks = make_blocks(16, 2, 3.0, cfg);
    const SearchOptions opts = surrogate_opts();
    std::size_t i = 0;
    for (auto _ : state) {
        const TrellisResult r = brute_force_search(blocks[i++ % blocks.size()], cfg, opts);
        benchmark::DoNotOptimize(r.total_cost);
    }
}
BENCHMARK(BM_BruteForce);

void BM_HdqQuantize(benchmark::State& state) {
    const QuantConfig cfg = make_quant_config(27);
    const auto blocks = make_blocks(32, static_cast<int>(state.range(0)), 4.0, cfg);
    std::size_t i = 0;
    for (auto _ : state) {
        const HdqResult r = hdq_quantize(blocks[i++ % blocks.size()], cfg);
        benchmark::DoNotOptimize(r.l1);
    }
}
BENCHMARK(BM_HdqQuantize)->Arg(8)->Arg(32);

} // namespace

BENCHMARK_MAIN();
