#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairim/graph.hpp"
#include "fairim/rng.hpp"

namespace fairim {

struct CascadeParams {
    double activation_probability = 0.01;
    std::size_t rollouts = 1000;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (!(activation_probability >= 0.0 && activation_probability <= 1.0))
            throw config_error("cascade: activation probability must lie in [0,1]");
        if (rollouts < 1) throw config_error("cascade: rollouts must be >= 1");
    }
};

struct GroupOutcome {
    std::size_t size_a = 0;
    std::size_t size_b = 0;
    double fraction_a = 0.0;
    double fraction_b = 0.0;
    double stderr_a = 0.0;
    double stderr_b = 0.0;
    double disparity = 0.0;  // |fraction_a - fraction_b|
};

// Monte Carlo (or exact) influence estimate. Fractions include the seeds
// themselves; seeds_included records that convention.
struct InfluenceReport {
    double total_fraction = 0.0;
    double stderr_total = 0.0;
    double expected_count = 0.0;
    std::map<std::string, GroupOutcome> per_group;
    std::size_t rollouts = 0;
    double activation_probability = 0.0;
    std::uint64_t rng_seed = 0;
    std::vector<NodeId> seeds;
    bool exact = false;
    bool seeds_included = true;
};

inline double disparity(const InfluenceReport& report, const std::string& attr_name) {
    auto it = report.per_group.find(attr_name);
    if (it == report.per_group.end())
        throw data_error("influence report has no attribute '" + attr_name + "'");
    return it->second.disparity;
}

namespace detail {

inline void validate_seeds(const AttributedGraph& g, const std::vector<NodeId>& seeds) {
    if (seeds.empty()) throw data_error("seed set is empty");
    std::vector<NodeId> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw data_error("seed set contains duplicates");
    if (sorted.back() >= g.n())
        throw data_error("seed " + std::to_string(sorted.back()) + " out of range for n=" +
                         std::to_string(g.n()));
}

// One live-edge coin per edge, addressed by edge index so the realization is
// identical for every seed set sharing the same stream seed.
inline bool edge_open(std::uint64_t stream_seed, std::size_t edge_index, double p) {
    if (p >= 1.0) return true;
    return to_unit(derive_seed(stream_seed, edge_index)) < p;
}

}  // namespace detail

// Single live-edge rollout: every edge is independently open with probability
// p; the influenced set is everything reachable from the seeds via open edges.
// Returns a 0/1 mask over nodes; seeds are always influenced.
inline std::vector<std::uint8_t> simulate_once_mask(const AttributedGraph& g,
                                                    const std::vector<NodeId>& seeds,
                                                    double p, std::uint64_t stream_seed) {
    detail::validate_seeds(g, seeds);

    std::vector<std::vector<NodeId>> open_adj(g.n());
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (detail::edge_open(stream_seed, e, p)) {
            open_adj[edges[e].first].push_back(edges[e].second);
            open_adj[edges[e].second].push_back(edges[e].first);
        }
    }

    std::vector<std::uint8_t> influenced(g.n(), 0);
    std::vector<NodeId> stack;
    for (NodeId s : seeds) {
        if (influenced[s]) continue;
        influenced[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : open_adj[u]) {
                if (!influenced[v]) {
                    influenced[v] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    return influenced;
}

inline std::vector<NodeId> simulate_once(const AttributedGraph& g,
                                         const std::vector<NodeId>& seeds, double p,
                                         std::uint64_t stream_seed) {
    const auto mask = simulate_once_mask(g, seeds, p, stream_seed);
    std::vector<NodeId> out;
    for (std::size_t u = 0; u < mask.size(); ++u)
        if (mask[u]) out.push_back(static_cast<NodeId>(u));
    return out;
}

namespace detail {

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    double stderr_of_mean() const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        double var = (sum_sq - sum * sum / n) / (n - 1.0);
        if (var < 0.0) var = 0.0;  // numerical guard
        return std::sqrt(var / n);
    }
};

struct GroupIndex {
    std::string name;
    const std::vector<Group>* labels;
    std::size_t size_a;
    std::size_t size_b;
};

inline std::vector<GroupIndex> resolve_groups(const AttributedGraph& g,
                                              const std::vector<std::string>& attr_names) {
    std::vector<GroupIndex> out;
    for (const auto& name : attr_names) {
        const auto& labels = g.groups(name);
        std::size_t a = 0;
        for (Group lbl : labels)
            if (lbl == Group::A) ++a;
        const std::size_t b = labels.size() - a;
        if (a == 0 || b == 0)
            throw data_error("attribute '" + name +
                             "' has an empty group; influenced fraction undefined");
        out.push_back({name, &labels, a, b});
    }
    return out;
}

}  // namespace detail

// Averages R independent rollouts. Rollout i runs on sub-seed
// derive_seed(rng_seed, i), so the estimate is invariant under rollout order.
inline InfluenceReport estimate_influence(const AttributedGraph& g,
                                          const std::vector<NodeId>& seeds,
                                          const CascadeParams& params,
                                          const std::vector<std::string>& attr_names = {}) {
    params.validate();
    detail::validate_seeds(g, seeds);
    const auto groups = detail::resolve_groups(g, attr_names);

    detail::Accumulator total;
    std::vector<detail::Accumulator> per_attr_a(groups.size()), per_attr_b(groups.size());

    for (std::size_t i = 0; i < params.rollouts; ++i) {
        const std::uint64_t sub_seed = derive_seed(params.rng_seed, i);
        const auto mask =
            simulate_once_mask(g, seeds, params.activation_probability, sub_seed);
        std::size_t count = 0;
        std::vector<std::size_t> count_a(groups.size(), 0);
        for (std::size_t u = 0; u < mask.size(); ++u) {
            if (!mask[u]) continue;
            ++count;
            for (std::size_t k = 0; k < groups.size(); ++k)
                if ((*groups[k].labels)[u] == Group::A) ++count_a[k];
        }
        total.add(static_cast<double>(count));
        for (std::size_t k = 0; k < groups.size(); ++k) {
            per_attr_a[k].add(static_cast<double>(count_a[k]));
            per_attr_b[k].add(static_cast<double>(count - count_a[k]));
        }
    }

    InfluenceReport report;
    report.expected_count = total.mean();
    report.total_fraction = total.mean() / static_cast<double>(g.n());
    report.stderr_total = total.stderr_of_mean() / static_cast<double>(g.n());
    report.rollouts = params.rollouts;
    report.activation_probability = params.activation_probability;
    report.rng_seed = params.rng_seed;
    report.seeds = seeds;

    for (std::size_t k = 0; k < groups.size(); ++k) {
        GroupOutcome out;
        out.size_a = groups[k].size_a;
        out.size_b = groups[k].size_b;
        out.fraction_a = per_attr_a[k].mean() / static_cast<double>(out.size_a);
        out.fraction_b = per_attr_b[k].mean() / static_cast<double>(out.size_b);
        out.stderr_a = per_attr_a[k].stderr_of_mean() / static_cast<double>(out.size_a);
        out.stderr_b = per_attr_b[k].stderr_of_mean() / static_cast<double>(out.size_b);
        out.disparity = std::abs(out.fraction_a - out.fraction_b);
        report.per_group.emplace(groups[k].name, out);
    }
    return report;
}

inline constexpr std::size_t kExactEnumerationMaxEdges = 20;

// Exact expected influence by summing over all 2^m live-edge realizations,
// each weighted p^open * (1-p)^closed. Only for graphs with few edges.
inline InfluenceReport exact_influence(const AttributedGraph& g,
                                       const std::vector<NodeId>& seeds, double p,
                                       const std::vector<std::string>& attr_names = {}) {
    if (!(p >= 0.0 && p <= 1.0))
        throw config_error("exact_influence: activation probability must lie in [0,1]");
    detail::validate_seeds(g, seeds);
    const auto groups = detail::resolve_groups(g, attr_names);

    const std::size_t m = g.edge_count();
    if (m > kExactEnumerationMaxEdges)
        throw config_error("exact_influence: graph has " + std::to_string(m) +
                           " edges, enumeration limit is " +
                           std::to_string(kExactEnumerationMaxEdges));

    std::vector<double> pow_open(m + 1), pow_closed(m + 1);
    pow_open[0] = pow_closed[0] = 1.0;
    for (std::size_t k = 1; k <= m; ++k) {
        pow_open[k] = pow_open[k - 1] * p;
        pow_closed[k] = pow_closed[k - 1] * (1.0 - p);
    }

    const auto& edges = g.edges();
    std::vector<std::uint8_t> seed_mask(g.n(), 0);
    for (NodeId s : seeds) seed_mask[s] = 1;

    double expected_total = 0.0;
    std::vector<double> expected_a(groups.size(), 0.0);

    std::vector<std::uint8_t> influenced(g.n());
    std::vector<NodeId> stack;
    std::vector<std::vector<NodeId>> open_adj(g.n());

    for (std::uint64_t subset = 0; subset < (1ULL << m); ++subset) {
        const int open = static_cast<int>(std::popcount(subset));
        const double weight =
            pow_open[static_cast<std::size_t>(open)] * pow_closed[m - open];
        if (weight == 0.0) continue;

        for (auto& adj : open_adj) adj.clear();
        for (std::size_t e = 0; e < m; ++e) {
            if (subset & (1ULL << e)) {
                open_adj[edges[e].first].push_back(edges[e].second);
                open_adj[edges[e].second].push_back(edges[e].first);
            }
        }

        std::fill(influenced.begin(), influenced.end(), 0);
        for (NodeId s : seeds) {
            if (influenced[s]) continue;
            influenced[s] = 1;
            stack.push_back(s);
            while (!stack.empty()) {
                const NodeId u = stack.back();
                stack.pop_back();
                for (NodeId v : open_adj[u])
                    if (!influenced[v]) {
                        influenced[v] = 1;
                        stack.push_back(v);
                    }
            }
        }

        std::size_t count = 0;
        std::vector<std::size_t> count_a(groups.size(), 0);
        for (std::size_t u = 0; u < g.n(); ++u) {
            if (!influenced[u]) continue;
            ++count;
            for (std::size_t k = 0; k < groups.size(); ++k)
                if ((*groups[k].labels)[u] == Group::A) ++count_a[k];
        }
        expected_total += weight * static_cast<double>(count);
        for (std::size_t k = 0; k < groups.size(); ++k)
            expected_a[k] += weight * static_cast<double>(count_a[k]);
    }

    InfluenceReport report;
    report.expected_count = expected_total;
    report.total_fraction = expected_total / static_cast<double>(g.n());
    report.stderr_total = 0.0;
    report.rollouts = 0;
    report.activation_probability = p;
    report.seeds = seeds;
    report.exact = true;

    for (std::size_t k = 0; k < groups.size(); ++k) {
        GroupOutcome out;
        out.size_a = groups[k].size_a;
        out.size_b = groups[k].size_b;
        out.fraction_a = expected_a[k] / static_cast<double>(out.size_a);
        out.fraction_b =
            (expected_total - expected_a[k]) / static_cast<double>(out.size_b);
        out.disparity = std::abs(out.fraction_a - out.fraction_b);
        report.per_group.emplace(groups[k].name, out);
    }
    return report;
}

}  // namespace fairim
