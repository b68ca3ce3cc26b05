#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fairim/common.hpp"
#include "fairim/embedding.hpp"
#include "fairim/graph.hpp"
#include "fairim/kmeans.hpp"
#include "fairim/rng.hpp"

namespace fairim {

struct SeedSet {
    std::vector<NodeId> nodes;  // insertion order, no duplicates
    std::size_t budget = 0;
    std::string method;
    // attribute name -> {count in A, count in B}
    std::map<std::string, std::array<std::size_t, 2>> group_counts;
};

inline void annotate_groups(SeedSet& seeds, const AttributedGraph& g) {
    seeds.group_counts.clear();
    for (const auto& name : g.attribute_names()) {
        const auto& labels = g.groups(name);
        std::array<std::size_t, 2> counts{0, 0};
        for (NodeId u : seeds.nodes) ++counts[labels[u] == Group::A ? 0 : 1];
        seeds.group_counts[name] = counts;
    }
}

namespace detail {

inline void check_budget(std::size_t budget, std::size_t n) {
    if (budget == 0) throw config_error("seed budget must be positive");
    if (budget > n)
        throw config_error("seed budget " + std::to_string(budget) + " exceeds node count " +
                           std::to_string(n));
}

}  // namespace detail

// k-means with one cluster per seed; each centroid maps to the nearest
// still-unused node.
inline SeedSet normal_selection(const EmbeddingMatrix& z, std::size_t budget,
                                std::uint64_t rng_seed) {
    const auto n = static_cast<std::size_t>(z.rows());
    detail::check_budget(budget, n);
    const Clustering c = kmeans(z, budget, rng_seed);
    SeedSet seeds;
    seeds.budget = budget;
    seeds.method = "normal";
    std::vector<std::uint8_t> used(n, 0);
    for (Eigen::Index i = 0; i < c.centroids.rows(); ++i) {
        const NodeId u = nearest_node(c.centroids.row(i), z, used);
        used[u] = 1;
        seeds.nodes.push_back(u);
    }
    return seeds;
}

// Fair Selection: cluster the embedding space, read off the group mix of each
// cluster's s nearest members, then pick that many seeds per group through
// sub-clustering restricted to the group's members.
inline SeedSet fair_selection(const EmbeddingMatrix& z, const std::vector<NodeId>& group_a,
                              const std::vector<NodeId>& group_b, std::size_t k_clusters,
                              std::size_t budget, std::uint64_t rng_seed,
                              const std::string& attribute_name = "attribute") {
    const auto n = static_cast<std::size_t>(z.rows());
    detail::check_budget(budget, n);
    if (k_clusters == 0) throw config_error("k_clusters must be positive");
    if (k_clusters > n) throw config_error("k_clusters exceeds node count");
    if (group_a.empty() || group_b.empty())
        throw data_error("fair selection needs both groups non-empty");
    if (group_a.size() + group_b.size() != n)
        throw data_error("groups must partition the node set");

    std::vector<std::uint8_t> in_a(n, 0);
    for (NodeId u : group_a) {
        if (u >= n) throw data_error("group node out of range");
        in_a[u] = 1;
    }
    for (NodeId u : group_b)
        if (u >= n || in_a[u]) throw data_error("groups must partition the node set");

    const Clustering c = kmeans(z, k_clusters, derive_seed(rng_seed, 0));

    std::vector<std::vector<NodeId>> members(k_clusters);
    for (std::size_t u = 0; u < n; ++u)
        members[c.assignment[u]].push_back(static_cast<NodeId>(u));

    // per-cluster quotas: budget/k each, remainder to the largest clusters,
    // overflow past a cluster's population moved to whoever has spare room
    std::vector<std::size_t> quota(k_clusters, budget / k_clusters);
    {
        std::vector<std::size_t> order(k_clusters);
        for (std::size_t i = 0; i < k_clusters; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return members[a].size() > members[b].size();
        });
        for (std::size_t r = 0; r < budget % k_clusters; ++r) ++quota[order[r]];
    }
    for (std::size_t i = 0; i < k_clusters; ++i) {
        while (quota[i] > members[i].size()) {
            std::size_t best = k_clusters;
            std::size_t best_spare = 0;
            for (std::size_t j = 0; j < k_clusters; ++j) {
                const std::size_t spare = members[j].size() - std::min(members[j].size(), quota[j]);
                if (spare > best_spare) {
                    best_spare = spare;
                    best = j;
                }
            }
            if (best == k_clusters) throw data_error("cannot place all seeds");
            --quota[i];
            ++quota[best];
        }
    }

    SeedSet seeds;
    seeds.budget = budget;
    seeds.method = "fair";
    std::vector<std::uint8_t> used(n, 0);

    for (std::size_t i = 0; i < k_clusters; ++i) {
        const std::size_t s = quota[i];
        if (s == 0) continue;
        const auto& cluster = members[i];

        Eigen::MatrixXd cluster_z(cluster.size(), z.cols());
        for (std::size_t r = 0; r < cluster.size(); ++r) cluster_z.row(r) = z.row(cluster[r]);
        const auto near = knn(s, c.centroids.row(static_cast<Eigen::Index>(i)), cluster_z);
        std::size_t count_a = 0;
        for (std::size_t idx : near)
            if (in_a[cluster[idx]]) ++count_a;
        const std::size_t count_b = s - count_a;

        const std::array<std::size_t, 2> want{count_a, count_b};
        for (int side = 0; side < 2; ++side) {
            if (want[side] == 0) continue;
            std::vector<NodeId> sub;
            for (NodeId u : cluster)
                if ((in_a[u] != 0) == (side == 0)) sub.push_back(u);
            Eigen::MatrixXd sub_z(sub.size(), z.cols());
            for (std::size_t r = 0; r < sub.size(); ++r) sub_z.row(r) = z.row(sub[r]);
            const Clustering sc = kmeans(sub_z, want[side],
                                         derive_seed(rng_seed, 1 + 2 * i + side));
            for (Eigen::Index cc = 0; cc < sc.centroids.rows(); ++cc) {
                const NodeId u = nearest_node_among(sc.centroids.row(cc), z, sub, used);
                used[u] = 1;
                seeds.nodes.push_back(u);
            }
        }
    }

    std::array<std::size_t, 2> counts{0, 0};
    for (NodeId u : seeds.nodes) ++counts[in_a[u] ? 0 : 1];
    seeds.group_counts[attribute_name] = counts;
    return seeds;
}

inline SeedSet fair_selection(const EmbeddingMatrix& z, const AttributedGraph& g,
                              const std::string& attribute_name, std::size_t k_clusters,
                              std::size_t budget, std::uint64_t rng_seed) {
    auto [a, b] = group_nodes(g, attribute_name);
    return fair_selection(z, a, b, k_clusters, budget, rng_seed, attribute_name);
}

}  // namespace fairim
