#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fairim/graph.hpp"

namespace fairim {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view token) {
    std::uint64_t value = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

// Whitespace-separated "u v" pairs, one per line. '#'-lines are comments
// except the optional "#n <count>" header which declares the node count
// (allowing trailing isolated nodes). Without a header, n = 1 + max id seen.
inline AttributedGraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open edge list '" + path + "'");

    std::optional<std::size_t> declared_n;
    std::vector<Edge> edges;
    NodeId max_id = 0;
    bool any_node = false;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = detail::trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '#') {
            std::istringstream hs{std::string(sv.substr(1))};
            std::string tag;
            if (hs >> tag && tag == "n") {
                std::uint64_t count = 0;
                if (!(hs >> count))
                    throw data_error(path + ":" + std::to_string(lineno) +
                                     ": malformed #n header");
                declared_n = static_cast<std::size_t>(count);
            }
            continue;
        }
        std::istringstream ls{std::string(sv)};
        std::string tu, tv, extra;
        if (!(ls >> tu >> tv))
            throw data_error(path + ":" + std::to_string(lineno) + ": expected 'u v' pair");
        if (ls >> extra)
            throw data_error(path + ":" + std::to_string(lineno) + ": trailing token '" +
                             extra + "'");
        const auto u = detail::parse_u64(tu);
        const auto v = detail::parse_u64(tv);
        if (!u || !v)
            throw data_error(path + ":" + std::to_string(lineno) + ": malformed node id");
        if (*u == *v)
            throw data_error(path + ":" + std::to_string(lineno) + ": self-loop on node " +
                             std::to_string(*u));
        edges.emplace_back(static_cast<NodeId>(*u), static_cast<NodeId>(*v));
        max_id = std::max({max_id, static_cast<NodeId>(*u), static_cast<NodeId>(*v)});
        any_node = true;
    }

    const std::size_t n = declared_n ? *declared_n : (any_node ? max_id + 1 : 0);
    if (declared_n && any_node && max_id >= *declared_n)
        throw data_error(path + ": node id " + std::to_string(max_id) +
                         " exceeds declared #n " + std::to_string(*declared_n));
    return AttributedGraph(n, std::move(edges));
}

inline void write_edge_list(const AttributedGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write edge list '" + path + "'");
    out << "#n " << g.n() << "\n";
    for (const auto& [u, v] : g.edges()) out << u << " " << v << "\n";
}

// Remapping variant for files with arbitrary (sparse) node ids: distinct ids
// are ranked ascending and replaced by their rank. The sidecar CSV records
// "original_id,dense_id" for every node.
inline AttributedGraph load_edge_list_remapped(const std::string& path,
                                               const std::string& sidecar_path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open edge list '" + path + "'");

    std::vector<std::pair<std::uint64_t, std::uint64_t>> raw_edges;
    std::map<std::uint64_t, NodeId> id_map;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::istringstream ls{std::string(sv)};
        std::string tu, tv;
        if (!(ls >> tu >> tv))
            throw data_error(path + ":" + std::to_string(lineno) + ": expected 'u v' pair");
        const auto u = detail::parse_u64(tu);
        const auto v = detail::parse_u64(tv);
        if (!u || !v)
            throw data_error(path + ":" + std::to_string(lineno) + ": malformed node id");
        if (*u == *v)
            throw data_error(path + ":" + std::to_string(lineno) + ": self-loop on node " +
                             std::to_string(*u));
        raw_edges.emplace_back(*u, *v);
        id_map.emplace(*u, 0);
        id_map.emplace(*v, 0);
    }

    NodeId next = 0;
    for (auto& [orig, dense] : id_map) dense = next++;

    std::vector<Edge> edges;
    edges.reserve(raw_edges.size());
    for (const auto& [u, v] : raw_edges)
        edges.emplace_back(id_map.at(u), id_map.at(v));

    std::ofstream sidecar(sidecar_path);
    if (!sidecar) throw data_error("cannot write id map '" + sidecar_path + "'");
    sidecar << "original_id,dense_id\n";
    for (const auto& [orig, dense] : id_map) sidecar << orig << "," << dense << "\n";

    return AttributedGraph(id_map.size(), std::move(edges));
}

// CSV "node_id,<attr1>[,<attr2>...]" with one row per node. Values are stored
// verbatim; binarization happens later via a predicate.
inline void load_attributes(const std::string& path, AttributedGraph& g) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open attribute file '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw data_error(path + ": missing header row");
    auto header = detail::split(detail::trim(line), ',');
    if (header.size() < 2 || detail::trim(header[0]) != "node_id")
        throw data_error(path + ": header must be 'node_id,<attr>[,...]'");

    std::vector<std::string> names;
    for (std::size_t c = 1; c < header.size(); ++c)
        names.emplace_back(detail::trim(header[c]));

    std::vector<std::vector<std::string>> columns(names.size(),
                                                  std::vector<std::string>(g.n()));
    std::vector<bool> seen(g.n(), false);

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = detail::trim(line);
        if (sv.empty()) continue;
        auto fields = detail::split(sv, ',');
        if (fields.size() != header.size())
            throw data_error(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        const auto id = detail::parse_u64(detail::trim(fields[0]));
        if (!id)
            throw data_error(path + ":" + std::to_string(lineno) + ": malformed node id");
        if (*id >= g.n())
            throw data_error(path + ":" + std::to_string(lineno) + ": unknown node id " +
                             std::to_string(*id));
        if (seen[*id])
            throw data_error(path + ":" + std::to_string(lineno) + ": duplicate row for node " +
                             std::to_string(*id));
        seen[*id] = true;
        for (std::size_t c = 0; c < names.size(); ++c)
            columns[c][*id] = std::string(detail::trim(fields[c + 1]));
    }

    for (std::size_t u = 0; u < g.n(); ++u)
        if (!seen[u])
            throw data_error(path + ": missing attribute row for node " + std::to_string(u));

    for (std::size_t c = 0; c < names.size(); ++c)
        g.set_raw_attribute(names[c], std::move(columns[c]));
}

inline void write_attributes(const AttributedGraph& g, const std::string& path) {
    const auto& names = g.raw_attribute_names();
    if (names.empty()) throw data_error("graph has no raw attributes to write");
    std::ofstream out(path);
    if (!out) throw data_error("cannot write attribute file '" + path + "'");
    out << "node_id";
    for (const auto& name : names) out << "," << name;
    out << "\n";
    for (std::size_t u = 0; u < g.n(); ++u) {
        out << u;
        for (const auto& name : names) out << "," << g.raw_attribute(name)[u];
        out << "\n";
    }
}

}  // namespace fairim
