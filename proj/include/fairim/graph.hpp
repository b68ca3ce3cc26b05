#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fairim/common.hpp"

namespace fairim {

enum class Group : std::uint8_t { A = 0, B = 1 };

inline const char* group_name(Group g) { return g == Group::A ? "A" : "B"; }

using Edge = std::pair<NodeId, NodeId>;

// Undirected graph over dense 0-based node ids with per-node attributes.
// Raw attribute columns hold the values read from file verbatim; binarized
// attributes assign each node to group A or B. Immutable once built except
// for attribute installation.
class AttributedGraph {
  public:
    AttributedGraph() = default;

    AttributedGraph(std::size_t n, std::vector<Edge> edges) : n_(n) {
        for (auto& [u, v] : edges) {
            if (u == v) throw data_error("self-loop on node " + std::to_string(u));
            if (u > v) std::swap(u, v);
            if (v >= n_)
                throw data_error("edge endpoint " + std::to_string(v) +
                                 " out of range for n=" + std::to_string(n_));
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        edges_ = std::move(edges);
        adjacency_.assign(n_, {});
        for (const auto& [u, v] : edges_) {
            adjacency_[u].push_back(v);
            adjacency_[v].push_back(u);
        }
        for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
    }

    std::size_t n() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<NodeId>& neighbors(NodeId u) const { return adjacency_.at(u); }
    std::size_t degree(NodeId u) const { return adjacency_.at(u).size(); }

    bool has_edge(NodeId u, NodeId v) const {
        if (u > v) std::swap(u, v);
        return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
    }

    // --- raw attribute columns -------------------------------------------

    void set_raw_attribute(const std::string& name, std::vector<std::string> values) {
        if (values.size() != n_)
            throw data_error("attribute '" + name + "' covers " +
                             std::to_string(values.size()) + " of " + std::to_string(n_) +
                             " nodes");
        if (!raw_attributes_.count(name)) raw_attribute_names_.push_back(name);
        raw_attributes_[name] = std::move(values);
    }

    bool has_raw_attribute(const std::string& name) const {
        return raw_attributes_.count(name) != 0;
    }

    const std::vector<std::string>& raw_attribute(const std::string& name) const {
        auto it = raw_attributes_.find(name);
        if (it == raw_attributes_.end())
            throw data_error("unknown raw attribute '" + name + "'");
        return it->second;
    }

    const std::vector<std::string>& raw_attribute_names() const {
        return raw_attribute_names_;
    }

    // --- binarized attributes --------------------------------------------

    void set_groups(const std::string& name, std::vector<Group> labels) {
        if (labels.size() != n_)
            throw data_error("group labels for '" + name + "' cover " +
                             std::to_string(labels.size()) + " of " + std::to_string(n_) +
                             " nodes");
        if (!groups_.count(name)) attribute_names_.push_back(name);
        groups_[name] = std::move(labels);
    }

    bool has_attribute(const std::string& name) const { return groups_.count(name) != 0; }

    const std::vector<Group>& groups(const std::string& name) const {
        auto it = groups_.find(name);
        if (it == groups_.end()) throw data_error("unknown attribute '" + name + "'");
        return it->second;
    }

    const std::vector<std::string>& attribute_names() const { return attribute_names_; }

  private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;                 // canonical: u < v, sorted, unique
    std::vector<std::vector<NodeId>> adjacency_;
    std::vector<std::string> raw_attribute_names_;
    std::map<std::string, std::vector<std::string>> raw_attributes_;
    std::vector<std::string> attribute_names_;
    std::map<std::string, std::vector<Group>> groups_;
};

// Binary adjacency-row features: row u is the indicator vector of u's
// neighborhood. Symmetric, zero diagonal, no normalization.
using FeatureMatrix = Eigen::MatrixXd;

inline FeatureMatrix feature_matrix(const AttributedGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.n());
    FeatureMatrix x = FeatureMatrix::Zero(n, n);
    for (const auto& [u, v] : g.edges()) {
        x(u, v) = 1.0;
        x(v, u) = 1.0;
    }
    return x;
}

// Installs binary group labels computed from a raw attribute column.
inline void binarize_attribute(AttributedGraph& g, const std::string& attr_name,
                               const std::function<Group(const std::string&)>& predicate) {
    const auto& raw = g.raw_attribute(attr_name);
    std::vector<Group> labels(g.n());
    for (std::size_t u = 0; u < g.n(); ++u) {
        try {
            labels[u] = predicate(raw[u]);
        } catch (const std::exception& e) {
            throw data_error("attribute '" + attr_name + "': predicate failed on node " +
                             std::to_string(u) + " value '" + raw[u] + "': " + e.what());
        }
    }
    g.set_groups(attr_name, std::move(labels));
}

// Predicate for integer-valued attributes: A iff value <= threshold.
inline std::function<Group(const std::string&)> int_le_predicate(long threshold) {
    return [threshold](const std::string& value) {
        std::size_t pos = 0;
        long parsed = 0;
        try {
            parsed = std::stol(value, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("not an integer");
        }
        if (pos != value.size()) throw std::runtime_error("not an integer");
        return parsed <= threshold ? Group::A : Group::B;
    };
}

// Predicate for attributes already stored as group letters.
inline std::function<Group(const std::string&)> ab_predicate() {
    return [](const std::string& value) {
        if (value == "A") return Group::A;
        if (value == "B") return Group::B;
        throw std::runtime_error("expected 'A' or 'B'");
    };
}

// Partition of the node set by group label; each list sorted ascending.
inline std::pair<std::vector<NodeId>, std::vector<NodeId>> group_nodes(
    const AttributedGraph& g, const std::string& attr_name) {
    const auto& labels = g.groups(attr_name);
    std::vector<NodeId> a, b;
    for (std::size_t u = 0; u < labels.size(); ++u) {
        (labels[u] == Group::A ? a : b).push_back(static_cast<NodeId>(u));
    }
    return {std::move(a), std::move(b)};
}

}  // namespace fairim
