#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "fairim/common.hpp"
#include "fairim/diffusion.hpp"
#include "fairim/graph.hpp"
#include "fairim/rng.hpp"
#include "fairim/selection.hpp"

namespace fairim {

// Fixed set of live-edge realizations shared by every marginal-gain query.
// Realization r uses exactly the coins of rollout r in estimate_influence with
// the same seed, so greedy's internal scores match the simulator.
class LiveEdgeEnsemble {
  public:
    LiveEdgeEnsemble(const AttributedGraph& g, double p, std::size_t rollouts,
                     std::uint64_t rng_seed)
        : n_(g.n()), rollouts_(rollouts) {
        if (p < 0.0 || p > 1.0) throw config_error("activation probability must be in [0,1]");
        if (rollouts == 0) throw config_error("need at least one realization");
        comp_.resize(rollouts);
        comp_size_.resize(rollouts);
        std::vector<NodeId> parent(n_);
        std::vector<std::uint32_t> size(n_);
        for (std::size_t r = 0; r < rollouts; ++r) {
            const std::uint64_t sub = derive_seed(rng_seed, static_cast<std::uint64_t>(r));
            std::iota(parent.begin(), parent.end(), NodeId{0});
            std::fill(size.begin(), size.end(), 1u);
            for (std::size_t e = 0; e < g.edges().size(); ++e) {
                if (!detail::edge_open(sub, e, p)) continue;
                NodeId a = find(parent, g.edges()[e].first);
                NodeId b = find(parent, g.edges()[e].second);
                if (a == b) continue;
                if (size[a] < size[b]) std::swap(a, b);
                parent[b] = a;
                size[a] += size[b];
            }
            auto& comp = comp_[r];
            comp.resize(n_);
            auto& csz = comp_size_[r];
            csz.resize(n_);
            for (NodeId u = 0; u < n_; ++u) {
                const NodeId root = find(parent, u);
                comp[u] = root;
                csz[u] = size[root];
            }
        }
        covered_stamp_.assign(rollouts, std::vector<std::uint32_t>(n_, 0));
    }

    std::size_t node_count() const { return n_; }
    std::size_t rollouts() const { return rollouts_; }

    // reset the incremental coverage state to the empty seed set
    void reset() {
        ++generation_;
        covered_count_ = 0.0;
    }

    // expected marginal gain of adding u to the current covered set, plus the
    // sample standard error over realizations
    std::pair<double, double> marginal_gain(NodeId u) const {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t r = 0; r < rollouts_; ++r) {
            const NodeId root = comp_[r][u];
            const double gain =
                covered_stamp_[r][root] == generation_ ? 0.0 : comp_size_[r][root];
            sum += gain;
            sum_sq += gain * gain;
        }
        const double rr = static_cast<double>(rollouts_);
        const double mean = sum / rr;
        double se = 0.0;
        if (rollouts_ > 1) {
            const double var = std::max(0.0, (sum_sq - sum * sum / rr) / (rr - 1.0));
            se = std::sqrt(var / rr);
        }
        return {mean, se};
    }

    // commit u to the seed set, marking its components covered
    void add_seed(NodeId u) {
        for (std::size_t r = 0; r < rollouts_; ++r) {
            const NodeId root = comp_[r][u];
            if (covered_stamp_[r][root] != generation_) {
                covered_stamp_[r][root] = generation_;
                covered_count_ += comp_size_[r][root];
            }
        }
    }

    // expected influenced count of the seeds committed so far
    double covered() const { return covered_count_ / static_cast<double>(rollouts_); }

    // expected influenced count of an arbitrary seed set (fresh scan)
    double influence(const std::vector<NodeId>& seeds) const {
        double total = 0.0;
        std::vector<NodeId> roots;
        for (std::size_t r = 0; r < rollouts_; ++r) {
            roots.clear();
            double count = 0.0;
            for (NodeId u : seeds) {
                const NodeId root = comp_[r][u];
                if (std::find(roots.begin(), roots.end(), root) == roots.end()) {
                    roots.push_back(root);
                    count += comp_size_[r][root];
                }
            }
            total += count;
        }
        return total / static_cast<double>(rollouts_);
    }

  private:
    static NodeId find(std::vector<NodeId>& parent, NodeId u) {
        while (parent[u] != u) {
            parent[u] = parent[parent[u]];
            u = parent[u];
        }
        return u;
    }

    std::size_t n_;
    std::size_t rollouts_;
    std::vector<std::vector<NodeId>> comp_;
    std::vector<std::vector<std::uint32_t>> comp_size_;
    mutable std::vector<std::vector<std::uint32_t>> covered_stamp_;
    std::uint32_t generation_ = 1;
    double covered_count_ = 0.0;
};

struct GreedyTrace {
    struct Step {
        NodeId node = 0;
        double gain = 0.0;
        double gain_stderr = 0.0;
        std::size_t evaluations = 0;
    };
    std::vector<Step> steps;
    std::size_t rollouts = 0;
};

struct GreedyResult {
    SeedSet seeds;
    GreedyTrace trace;
};

namespace detail {

inline void check_greedy_args(const AttributedGraph& g, std::size_t budget) {
    if (budget == 0) throw config_error("seed budget must be positive");
    if (budget > g.n()) throw config_error("seed budget exceeds node count");
}

}  // namespace detail

// Reference greedy: re-evaluate every remaining node each iteration.
inline GreedyResult greedy_plain(const AttributedGraph& g, double p, std::size_t budget,
                                 std::size_t rollouts, std::uint64_t rng_seed) {
    detail::check_greedy_args(g, budget);
    LiveEdgeEnsemble ens(g, p, rollouts, rng_seed);
    ens.reset();
    GreedyResult out;
    out.seeds.budget = budget;
    out.seeds.method = "greedy";
    out.trace.rollouts = rollouts;
    std::vector<std::uint8_t> chosen(g.n(), 0);
    for (std::size_t it = 0; it < budget; ++it) {
        NodeId best = 0;
        double best_gain = -1.0, best_se = 0.0;
        std::size_t evals = 0;
        for (NodeId u = 0; u < g.n(); ++u) {
            if (chosen[u]) continue;
            const auto [gain, se] = ens.marginal_gain(u);
            ++evals;
            if (gain > best_gain) {
                best_gain = gain;
                best_se = se;
                best = u;
            }
        }
        chosen[best] = 1;
        ens.add_seed(best);
        out.seeds.nodes.push_back(best);
        out.trace.steps.push_back({best, best_gain, best_se, evals});
    }
    return out;
}

// Lazy greedy (CELF): stale gains sit in a priority queue; a popped entry that
// was scored against the current seed set is optimal by submodularity.
inline GreedyResult greedy_celf(const AttributedGraph& g, double p, std::size_t budget,
                                std::size_t rollouts, std::uint64_t rng_seed) {
    detail::check_greedy_args(g, budget);
    LiveEdgeEnsemble ens(g, p, rollouts, rng_seed);
    ens.reset();
    GreedyResult out;
    out.seeds.budget = budget;
    out.seeds.method = "greedy";
    out.trace.rollouts = rollouts;

    struct Entry {
        double gain;
        double se;
        NodeId node;
        std::size_t round;  // seed count the gain was scored against
    };
    const auto worse = [](const Entry& a, const Entry& b) {
        if (a.gain != b.gain) return a.gain < b.gain;
        return a.node > b.node;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> queue(worse);

    std::size_t evals = 0;
    for (NodeId u = 0; u < g.n(); ++u) {
        const auto [gain, se] = ens.marginal_gain(u);
        ++evals;
        queue.push({gain, se, u, 0});
    }

    for (std::size_t it = 0; it < budget; ++it) {
        while (true) {
            Entry top = queue.top();
            queue.pop();
            if (top.round == it) {
                ens.add_seed(top.node);
                out.seeds.nodes.push_back(top.node);
                out.trace.steps.push_back({top.node, top.gain, top.se, evals});
                evals = 0;
                break;
            }
            const auto [gain, se] = ens.marginal_gain(top.node);
            ++evals;
            queue.push({gain, se, top.node, it});
        }
    }
    return out;
}

inline SeedSet degree_seeds(const AttributedGraph& g, std::size_t budget) {
    detail::check_greedy_args(g, budget);
    std::vector<NodeId> order(g.n());
    std::iota(order.begin(), order.end(), NodeId{0});
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return g.degree(a) > g.degree(b);
    });
    SeedSet seeds;
    seeds.budget = budget;
    seeds.method = "degree";
    seeds.nodes.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget));
    return seeds;
}

inline SeedSet random_seeds(const AttributedGraph& g, std::size_t budget,
                            std::uint64_t rng_seed) {
    detail::check_greedy_args(g, budget);
    SplitMix64 rng(rng_seed);
    std::vector<NodeId> pool(g.n());
    std::iota(pool.begin(), pool.end(), NodeId{0});
    for (std::size_t i = 0; i < budget; ++i) {
        const std::size_t j = i + rng.next_index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    SeedSet seeds;
    seeds.budget = budget;
    seeds.method = "random";
    seeds.nodes.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(budget));
    return seeds;
}

}  // namespace fairim
