#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fairim/graph.hpp"
#include "fairim/rng.hpp"

namespace fairim {

// Two-block stochastic block model. Nodes 0..|A|-1 form group A, the rest
// group B, with |A| = round(r*n) (ties to even).
struct SbmParams {
    std::size_t n = 500;
    double r = 0.3;
    double p_intra_a = 0.025;
    double p_intra_b = 0.025;
    double p_inter = 0.001;

    std::size_t group_a_size() const {
        return static_cast<std::size_t>(std::nearbyint(r * static_cast<double>(n)));
    }

    void validate() const {
        if (n == 0) throw config_error("sbm: n must be positive");
        if (!(r > 0.0 && r < 1.0)) throw config_error("sbm: r must satisfy 0 < r < 1");
        const auto a = group_a_size();
        if (a < 1 || a >= n)
            throw config_error("sbm: r*n rounds to group size " + std::to_string(a) +
                               " outside [1, n)");
        for (double p : {p_intra_a, p_intra_b, p_inter})
            if (!(p >= 0.0 && p <= 1.0))
                throw config_error("sbm: probabilities must lie in [0,1]");
    }
};

// One Bernoulli trial per unordered pair, pairs visited in (u<v) lexicographic
// order on a single SplitMix64 stream; bit-identical for a fixed seed.
inline AttributedGraph generate_sbm(const SbmParams& params, std::uint64_t rng_seed) {
    params.validate();
    const std::size_t n = params.n;
    const std::size_t a_size = params.group_a_size();

    SplitMix64 rng(rng_seed);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u + 1 < n; ++u) {
        const bool u_in_a = u < a_size;
        for (std::size_t v = u + 1; v < n; ++v) {
            const bool v_in_a = v < a_size;
            const double p = (u_in_a && v_in_a)   ? params.p_intra_a
                             : (!u_in_a && !v_in_a) ? params.p_intra_b
                                                    : params.p_inter;
            if (rng.bernoulli(p))
                edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
    }

    AttributedGraph g(n, std::move(edges));
    std::vector<Group> labels(n, Group::B);
    std::vector<std::string> raw(n, "B");
    for (std::size_t u = 0; u < a_size; ++u) {
        labels[u] = Group::A;
        raw[u] = "A";
    }
    g.set_raw_attribute("block", std::move(raw));
    g.set_groups("block", std::move(labels));
    return g;
}

struct ExpectedEdgeCounts {
    double intra_a;
    double intra_b;
    double inter;
};

// Closed-form binomial means: C(|A|,2)*p_aa, C(|B|,2)*p_bb, |A||B|*p_ab.
inline ExpectedEdgeCounts expected_edge_counts(const SbmParams& params) {
    params.validate();
    const double a = static_cast<double>(params.group_a_size());
    const double b = static_cast<double>(params.n) - a;
    return {a * (a - 1.0) / 2.0 * params.p_intra_a,
            b * (b - 1.0) / 2.0 * params.p_intra_b,
            a * b * params.p_inter};
}

// Observed per-category edge counts of a generated graph, for validation.
struct ObservedEdgeCounts {
    std::size_t intra_a = 0;
    std::size_t intra_b = 0;
    std::size_t inter = 0;
};

inline ObservedEdgeCounts count_edges_by_group(const AttributedGraph& g,
                                               const std::string& attr_name) {
    const auto& labels = g.groups(attr_name);
    ObservedEdgeCounts counts;
    for (const auto& [u, v] : g.edges()) {
        if (labels[u] == Group::A && labels[v] == Group::A)
            ++counts.intra_a;
        else if (labels[u] == Group::B && labels[v] == Group::B)
            ++counts.intra_b;
        else
            ++counts.inter;
    }
    return counts;
}

// Induced subgraph on nodes whose integer age is at most max_age; ages
// low..split map to group A, the rest to B. Dense ids are reassigned by
// ascending original id.
inline AttributedGraph age_filter(const AttributedGraph& g, const std::string& age_attr,
                                  long max_age, long group_a_max_age) {
    const auto& raw = g.raw_attribute(age_attr);

    std::vector<long> ages(g.n());
    for (std::size_t u = 0; u < g.n(); ++u) {
        std::size_t pos = 0;
        try {
            ages[u] = std::stol(raw[u], &pos);
        } catch (const std::exception&) {
            throw data_error("age attribute: non-integer value '" + raw[u] + "' on node " +
                             std::to_string(u));
        }
        if (pos != raw[u].size())
            throw data_error("age attribute: non-integer value '" + raw[u] + "' on node " +
                             std::to_string(u));
    }

    std::vector<NodeId> dense(g.n(), 0);
    std::vector<NodeId> kept;
    for (std::size_t u = 0; u < g.n(); ++u) {
        if (ages[u] <= max_age) {
            dense[u] = static_cast<NodeId>(kept.size());
            kept.push_back(static_cast<NodeId>(u));
        }
    }

    std::vector<Edge> edges;
    for (const auto& [u, v] : g.edges())
        if (ages[u] <= max_age && ages[v] <= max_age)
            edges.emplace_back(dense[u], dense[v]);

    AttributedGraph sub(kept.size(), std::move(edges));
    std::vector<std::string> sub_ages(kept.size());
    std::vector<Group> labels(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        sub_ages[i] = raw[kept[i]];
        labels[i] = ages[kept[i]] <= group_a_max_age ? Group::A : Group::B;
    }
    sub.set_raw_attribute(age_attr, std::move(sub_ages));
    sub.set_groups(age_attr, std::move(labels));
    return sub;
}

// The Rice-Facebook preprocessing: keep age <= 20, label 18-19 as A, 20 as B.
inline AttributedGraph rice_filter(const AttributedGraph& g,
                                   const std::string& age_attr = "age") {
    return age_filter(g, age_attr, 20, 19);
}

}  // namespace fairim
