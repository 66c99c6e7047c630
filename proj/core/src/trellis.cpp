#include "tcq/trellis.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tcq/accel.hpp"
#include "tcq/errors.hpp"
#include "search_core.hpp"

namespace tcq {

CandidateSet build_candidates(double c_abs, double q_step) {
    if (!(q_step > 0.0)) throw std::domain_error("build_candidates: q_step must be > 0");
    const long long l = scalar_quantize(c_abs, q_step, detail::kPreQuantF);

    CandidateSet set;
    if (l > 2) {
        set.levels = {0, l - 2, l - 1, l, l + 1};
    } else {
        set.levels = {0, 1, 2, 3, 4};
    }
    set.count = 5;
    return set;
}

double rd_cost(double distortion, double bits, double lambda_rd) {
    if (lambda_rd < 0.0) throw std::domain_error("rd_cost: lambda_rd must be >= 0");
    return distortion + lambda_rd * bits;
}

namespace detail {

int trellis_start_pos(const Block& block, const ScanTable& scan, double q_step) {
    for (int p = scan.size() - 1; p >= 0; --p) {
        const double c = block.coeffs[static_cast<std::size_t>(scan.scan_to_raster[p])];
        if (scalar_quantize(std::fabs(c), q_step, kPreQuantF) != 0) return p;
    }
    return kNoLastPos;
}

void validate_options(const SearchOptions& options) {
    if (options.rate_mode != RateMode::kSurrogate && options.rate_mode != RateMode::kLinearModel)
        throw config_error("unsupported rate mode");
    if (options.rate_mode == RateMode::kLinearModel && options.params == nullptr)
        throw config_error("LINEAR_MODEL rate mode requires fitted rate parameters");
    if (options.rice_g < 0 || options.rice_g > 8)
        throw config_error("rice_g must be in 0..8");
}

double coef_rate(long long idx_mag, const QuantConfig& config, const SearchOptions& options) {
    if (options.rate_mode == RateMode::kSurrogate) {
        if (idx_mag == 0) return 1.0;
        return 1.0 + config.sign_bits + rice_bits(idx_mag - 1, options.rice_g);
    }
    if (idx_mag == 0) return 0.0;
    return options.params->alpha + options.params->beta * static_cast<double>(idx_mag);
}

namespace {

constexpr int kNodeCount = 5;   // states 0..3 plus the uncoded row
constexpr int kUncodedNode = 4; // also serves as its tie-break id

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeCost {
    double cost = kInf;
    double dist = 0.0;
    double bits = 0.0;
};

struct BackRef {
    int pred = -1;
    long long level = 0; // magnitude
    long long idx = 0;   // magnitude
};

// One evaluated candidate level at the current stage.
struct StageCandidate {
    long long level = 0;
    long long idx = 0; // magnitude of the coded index (0 for level 0)
    double dist = 0.0;
    double rate = 0.0; // per-coefficient bits, without cbf/last-position extras
    bool dist_used = false;
    bool rate_used = false;
};

struct StageTable {
    StageCandidate entries[6];
    int count = 0;

    StageCandidate* find(long long level) {
        for (int i = 0; i < count; ++i)
            if (entries[i].level == level) return &entries[i];
        return nullptr;
    }
};

// idx = (level + quantizer) / 2 for levels admissible at `quantizer`.
long long index_for_level(long long level, int quantizer) {
    assert(level == 0 || (level & 1) == quantizer);
    return level == 0 ? 0 : (level + quantizer) >> 1;
}

struct Relaxer {
    NodeCost next[kNodeCount];
    BackRef back[kNodeCount];
    int entering[kNodeCount] = {0, 0, 0, 0, 0};

    void offer(int dest, const NodeCost& from, double d, double r, double lambda, int pred,
               long long level, long long idx) {
        ++entering[dest];
        const double cost = from.cost + d + lambda * r;
        NodeCost& cur = next[dest];
        BackRef& ref = back[dest];
        bool take = cost < cur.cost;
        if (!take && cost == cur.cost) {
            const long long cur_mag = ref.idx;
            take = idx < cur_mag || (idx == cur_mag && pred < ref.pred);
        }
        if (take) {
            cur.cost = cost;
            cur.dist = from.dist + d;
            cur.bits = from.bits + r;
            ref = {pred, level, idx};
        }
    }
};

TrellisResult all_zero_result(const Block& block, const ScanTable& scan) {
    TrellisResult res;
    res.indices.assign(static_cast<std::size_t>(scan.size()), 0);
    res.states.assign(static_cast<std::size_t>(scan.size()), kUncoded);
    double dist = 0.0;
    for (const double c : block.coeffs) dist += c * c;
    res.total_distortion = dist;
    res.total_cost = dist;
    res.total_bits = 0.0;
    res.last_pos = kNoLastPos;
    return res;
}

} // namespace

TrellisResult viterbi_search(const Block& block, const QuantConfig& config,
                             const SearchOptions& options, int start_pos, bool prune) {
    validate_options(options);
    require_dims(block.width, block.height);
    const ScanTable scan = diagonal_scan(block.width, block.height);
    const LastPosTable lp = make_last_pos_table(block.width, block.height);
    const int n = scan.size();
    const double q = config.q_step;
    const double lambda = config.lambda_rd;

    if (start_pos < 0) return all_zero_result(block, scan);
    assert(start_pos < n);

    // Coefficients in scan order; search runs on magnitudes.
    std::vector<double> c_scan(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p)
        c_scan[static_cast<std::size_t>(p)] =
            block.coeffs[static_cast<std::size_t>(scan.scan_to_raster[p])];

    // Positions above the trellis start are zeroed outright.
    double skipped_dist = 0.0;
    for (int p = start_pos + 1; p < n; ++p)
        skipped_dist += c_scan[static_cast<std::size_t>(p)] * c_scan[static_cast<std::size_t>(p)];

    const int stages = start_pos + 1;
    NodeCost cur[kNodeCount];
    cur[kUncodedNode] = {skipped_dist, skipped_dist, 0.0};

    std::vector<std::array<BackRef, kNodeCount>> back(static_cast<std::size_t>(stages));

    TrellisResult res;
    res.counters.per_stage.reserve(static_cast<std::size_t>(stages));

    for (int s = 0; s < stages; ++s) {
        const int p = start_pos - s;
        const double c = c_scan[static_cast<std::size_t>(p)];
        const double c_abs = std::fabs(c);

        CandidateSet cands = build_candidates(c_abs, q);
        if (prune) cands = prune_candidates(cands, scalar_quantize(c_abs, q, kPreQuantF)).kept;

        // Evaluate each distinct candidate level once; the uncoded
        // continuation shares the level-0 distortion.
        StageTable table;
        {
            bool has_zero = false;
            for (int i = 0; i < cands.count; ++i) {
                const long long level = cands.levels[i];
                has_zero = has_zero || level == 0;
                StageCandidate e;
                e.level = level;
                e.idx = level == 0 ? 0 : index_for_level(level, static_cast<int>(level & 1));
                const double err = c_abs - static_cast<double>(level) * q;
                e.dist = err * err;
                e.rate = coef_rate(e.idx, config, options);
                table.entries[table.count++] = e;
            }
            if (!has_zero) {
                StageCandidate e;
                e.level = 0;
                e.idx = 0;
                e.dist = c_abs * c_abs;
                e.rate = coef_rate(0, config, options);
                table.entries[table.count++] = e;
            }
        }

        StageCounters sc;
        sc.scan_pos = p;
        Relaxer relax;

        for (int node = 0; node < kNodeCount; ++node) {
            if (cur[node].cost == kInf) continue;
            ++sc.active_nodes;

            if (node == kUncodedNode) {
                // Stay uncoded: zeroing distortion, no rate.
                StageCandidate* zero = table.find(0);
                zero->dist_used = true;
                relax.offer(kUncodedNode, cur[node], zero->dist, 0.0, lambda, kUncodedNode, 0, 0);
                ++sc.branches;

                // Exit to a coded state: the entering coefficient is
                // quantized with quantizer 0, so only even levels apply.
                const double extras = config.r_cbf + lp.at_scan(p);
                for (int i = 0; i < table.count; ++i) {
                    StageCandidate& e = table.entries[i];
                    if (e.level == 0 || (e.level & 1) != 0) continue;
                    e.dist_used = true;
                    e.rate_used = true;
                    const int dest = next_state(0, static_cast<int>(e.idx & 1));
                    relax.offer(dest, cur[node], e.dist, e.rate + extras, lambda, kUncodedNode,
                                e.level, e.idx);
                    ++sc.branches;
                }
                continue;
            }

            const int quantizer = node >> 1;
            for (int i = 0; i < table.count; ++i) {
                StageCandidate& e = table.entries[i];
                if (e.level == 0) {
                    if (!cands.contains(0)) continue; // pruned zero branch
                    e.dist_used = true;
                    e.rate_used = true;
                    relax.offer(next_state(node, 0), cur[node], e.dist, e.rate, lambda, node, 0, 0);
                    ++sc.branches;
                } else if ((e.level & 1) == quantizer) {
                    e.dist_used = true;
                    e.rate_used = true;
                    const long long idx = index_for_level(e.level, quantizer);
                    relax.offer(next_state(node, static_cast<int>(idx & 1)), cur[node], e.dist,
                                e.rate, lambda, node, e.level, idx);
                    ++sc.branches;
                }
            }
        }

        for (int i = 0; i < table.count; ++i) {
            if (table.entries[i].dist_used) ++sc.dist_evals;
            if (table.entries[i].rate_used) ++sc.rate_evals;
        }
        sc.adds = sc.branches;
        for (int node = 0; node < kNodeCount; ++node)
            if (relax.entering[node] > 1) {
                sc.compares += static_cast<std::uint64_t>(relax.entering[node] - 1);
                sc.selects += static_cast<std::uint64_t>(relax.entering[node] - 1);
            }

        for (int node = 0; node < kNodeCount; ++node) cur[node] = relax.next[node];
        back[static_cast<std::size_t>(s)] = std::to_array(relax.back);

        res.counters.branches += sc.branches;
        res.counters.dist_evals += sc.dist_evals;
        res.counters.rate_evals += sc.rate_evals;
        res.counters.adds += sc.adds;
        res.counters.compares += sc.compares;
        res.counters.selects += sc.selects;
        res.counters.per_stage.push_back(sc);
    }
    res.counters.stages = static_cast<std::uint64_t>(stages);

    // Terminal: cheapest over the all-uncoded path and every coded state.
    int best = kUncodedNode;
    for (int node = 0; node < kNumCodedStates; ++node)
        if (cur[node].cost < cur[best].cost) best = node;

    res.total_cost = cur[best].cost;
    res.total_distortion = cur[best].dist;
    res.total_bits = cur[best].bits;
    res.indices.assign(static_cast<std::size_t>(n), 0);
    res.states.assign(static_cast<std::size_t>(n), kUncoded);

    int node = best;
    for (int s = stages - 1; s >= 0; --s) {
        const int p = start_pos - s;
        const BackRef& ref = back[static_cast<std::size_t>(s)][static_cast<std::size_t>(node)];
        assert(ref.pred >= 0);
        if (ref.pred == kUncodedNode && node != kUncodedNode) {
            res.last_pos = p; // trellis departure: quantized at state 0
            res.states[static_cast<std::size_t>(p)] = 0;
            res.indices[static_cast<std::size_t>(p)] =
                c_scan[static_cast<std::size_t>(p)] < 0.0 ? -ref.idx : ref.idx;
        } else if (node != kUncodedNode || ref.pred != kUncodedNode) {
            res.states[static_cast<std::size_t>(p)] = ref.pred;
            res.indices[static_cast<std::size_t>(p)] =
                c_scan[static_cast<std::size_t>(p)] < 0.0 ? -ref.idx : ref.idx;
        }
        node = ref.pred;
    }
    return res;
}

} // namespace detail

TrellisResult tcq_search(const Block& block, const QuantConfig& config,
                         const SearchOptions& options) {
    detail::validate_options(options);
    require_dims(block.width, block.height);
    const ScanTable scan = diagonal_scan(block.width, block.height);
    const int start = detail::trellis_start_pos(block, scan, config.q_step);
    return detail::viterbi_search(block, config, options, start, /*prune=*/false);
}

TrellisResult brute_force_search(const Block& block, const QuantConfig& config,
                                 const SearchOptions& options) {
    detail::validate_options(options);
    require_dims(block.width, block.height);
    const ScanTable scan = diagonal_scan(block.width, block.height);
    const LastPosTable lp = make_last_pos_table(block.width, block.height);
    const int n = scan.size();
    const double q = config.q_step;

    const int start = detail::trellis_start_pos(block, scan, q);

    std::vector<double> c_scan(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p)
        c_scan[static_cast<std::size_t>(p)] =
            block.coeffs[static_cast<std::size_t>(scan.scan_to_raster[p])];

    TrellisResult res;
    if (start < 0) {
        res.indices.assign(static_cast<std::size_t>(n), 0);
        res.states.assign(static_cast<std::size_t>(n), kUncoded);
        double dist = 0.0;
        for (const double c : c_scan) dist += c * c;
        res.total_distortion = dist;
        res.total_cost = dist;
        res.last_pos = kNoLastPos;
        return res;
    }

    const int stages = start + 1;
    std::vector<CandidateSet> cands(static_cast<std::size_t>(stages));
    long long combos = 1;
    for (int p = 0; p <= start; ++p) {
        cands[static_cast<std::size_t>(p)] =
            build_candidates(std::fabs(c_scan[static_cast<std::size_t>(p)]), q);
        combos *= cands[static_cast<std::size_t>(p)].count;
        if (combos > 10'000'000)
            throw size_error("brute_force_search: candidate combinations exceed 1e7");
    }

    double fixed_dist = 0.0; // positions above the trellis start, always zeroed
    for (int p = start + 1; p < n; ++p)
        fixed_dist += c_scan[static_cast<std::size_t>(p)] * c_scan[static_cast<std::size_t>(p)];

    std::vector<int> choice(static_cast<std::size_t>(stages), 0);
    std::vector<long long> idx_buf(static_cast<std::size_t>(stages), 0);
    std::vector<int> state_buf(static_cast<std::size_t>(stages), kUncoded);

    bool have_best = false;
    double best_cost = 0.0;
    long long best_l1 = 0;
    std::vector<long long> best_idx;
    std::vector<int> best_states;
    int best_last = kNoLastPos;
    double best_dist = 0.0, best_bits = 0.0;

    for (;;) {
        // Evaluate the current level assignment (levels indexed by scan pos).
        int p_last = kNoLastPos;
        for (int p = start; p >= 0; --p) {
            if (cands[static_cast<std::size_t>(p)].levels[choice[static_cast<std::size_t>(p)]] !=
                0) {
                p_last = p;
                break;
            }
        }

        bool representable = true;
        double bits = 0.0;
        long long l1 = 0;
        std::fill(idx_buf.begin(), idx_buf.end(), 0);
        std::fill(state_buf.begin(), state_buf.end(), kUncoded);

        if (p_last >= 0) {
            bits = config.r_cbf + lp.at_scan(p_last);
            int st = 0;
            for (int p = p_last; p >= 0; --p) {
                const long long level =
                    cands[static_cast<std::size_t>(p)].levels[choice[static_cast<std::size_t>(p)]];
                long long idx = 0;
                if (level != 0) {
                    if ((level & 1) != (st >> 1)) {
                        representable = false;
                        break;
                    }
                    idx = (level + (st >> 1)) / 2;
                }
                idx_buf[static_cast<std::size_t>(p)] = idx;
                state_buf[static_cast<std::size_t>(p)] = st;
                bits += detail::coef_rate(idx, config, options);
                l1 += idx;
                st = next_state(st, static_cast<int>(idx & 1));
            }
        }

        if (representable) {
            double dist = fixed_dist;
            for (int p = 0; p <= start; ++p) {
                const long long level = p > p_last ? 0
                                                   : cands[static_cast<std::size_t>(p)]
                                                         .levels[choice[static_cast<std::size_t>(p)]];
                const double err =
                    std::fabs(c_scan[static_cast<std::size_t>(p)]) - static_cast<double>(level) * q;
                dist += err * err;
            }
            const double cost = dist + config.lambda_rd * bits;

            bool take = !have_best || cost < best_cost;
            if (!take && cost == best_cost) {
                if (l1 < best_l1) {
                    take = true;
                } else if (l1 == best_l1) {
                    for (int p = 0; p <= start; ++p) {
                        const long long a = idx_buf[static_cast<std::size_t>(p)];
                        const long long b = best_idx[static_cast<std::size_t>(p)];
                        if (a != b) {
                            take = a < b;
                            break;
                        }
                    }
                }
            }
            if (take) {
                have_best = true;
                best_cost = cost;
                best_l1 = l1;
                best_idx = idx_buf;
                best_states = state_buf;
                best_last = p_last;
                best_dist = dist;
                best_bits = bits;
            }
        }

        // Odometer over per-position candidate choices.
        int p = 0;
        while (p < stages) {
            if (++choice[static_cast<std::size_t>(p)] < cands[static_cast<std::size_t>(p)].count)
                break;
            choice[static_cast<std::size_t>(p)] = 0;
            ++p;
        }
        if (p == stages) break;
    }

    assert(have_best);
    res.indices.assign(static_cast<std::size_t>(n), 0);
    res.states.assign(static_cast<std::size_t>(n), kUncoded);
    for (int p = 0; p <= start; ++p) {
        const long long idx = best_idx[static_cast<std::size_t>(p)];
        res.indices[static_cast<std::size_t>(p)] =
            c_scan[static_cast<std::size_t>(p)] < 0.0 ? -idx : idx;
        res.states[static_cast<std::size_t>(p)] = best_states[static_cast<std::size_t>(p)];
    }
    res.total_cost = best_cost;
    res.total_distortion = best_dist;
    res.total_bits = best_bits;
    res.last_pos = best_last;
    res.counters.stages = static_cast<std::uint64_t>(stages);
    return res;
}

HdqResult hdq_quantize(const Block& block, const QuantConfig& config) {
    require_dims(block.width, block.height);
    const ScanTable scan = diagonal_scan(block.width, block.height);
    const int n = scan.size();

    HdqResult out;
    out.levels.resize(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
        const double c = block.coeffs[static_cast<std::size_t>(scan.scan_to_raster[p])];
        const long long level = scalar_quantize(c, config.q_step, config.f_offset);
        out.levels[static_cast<std::size_t>(p)] = level;
        if (level != 0) {
            out.last_pos = std::max(out.last_pos, p);
            ++out.l0;
            out.l1 += level < 0 ? -level : level;
        }
    }
    return out;
}

} // namespace tcq
