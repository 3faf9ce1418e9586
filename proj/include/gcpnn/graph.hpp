#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gcpnn/error.hpp"

namespace gcpnn {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;

/// Undirected simple graph. Edges are kept canonical (u < v), sorted and
/// unique; per-vertex neighbour lists are sorted as well.
class Graph {
public:
    Graph() = default;

    explicit Graph(int n) : adj_(check_order(n)) {}

    Graph(int n, const std::vector<Edge>& edges) : Graph(n) {
        for (auto [u, v] : edges) add_edge(u, v);
    }

    int order() const noexcept { return static_cast<int>(adj_.size()); }
    std::size_t size() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Vertex>& neighbours(Vertex v) const { return adj_.at(v); }
    int degree(Vertex v) const { return static_cast<int>(adj_.at(v).size()); }

    bool has_edge(Vertex u, Vertex v) const {
        if (u == v || u < 0 || v < 0 || u >= order() || v >= order()) return false;
        const auto& a = adj_[u];
        return std::binary_search(a.begin(), a.end(), v);
    }

    /// Adds {u, v}. Returns false when the edge already exists.
    bool add_edge(Vertex u, Vertex v) {
        if (u < 0 || v < 0 || u >= order() || v >= order())
            throw ArgumentError("edge endpoint out of range: (" + std::to_string(u) + ", " +
                                std::to_string(v) + ") for n=" + std::to_string(order()));
        if (u == v) throw ArgumentError("self-loop on vertex " + std::to_string(u));
        if (u > v) std::swap(u, v);
        auto& au = adj_[u];
        auto it = std::lower_bound(au.begin(), au.end(), v);
        if (it != au.end() && *it == v) return false;
        au.insert(it, v);
        auto& av = adj_[v];
        av.insert(std::lower_bound(av.begin(), av.end(), u), u);
        const Edge e{u, v};
        edges_.insert(std::lower_bound(edges_.begin(), edges_.end(), e), e);
        return true;
    }

    /// All pairs {u, v}, u < v, not joined by an edge, in lexicographic order.
    std::vector<Edge> non_edges() const {
        std::vector<Edge> out;
        for (Vertex u = 0; u < order(); ++u)
            for (Vertex v = u + 1; v < order(); ++v)
                if (!has_edge(u, v)) out.emplace_back(u, v);
        return out;
    }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.order() == b.order() && a.edges_ == b.edges_;
    }

private:
    static std::size_t check_order(int n) {
        if (n < 1) throw ArgumentError("graph needs at least one vertex, got n=" + std::to_string(n));
        return static_cast<std::size_t>(n);
    }

    std::vector<std::vector<Vertex>> adj_;
    std::vector<Edge> edges_;
};

inline Graph complete_graph(int n) {
    Graph g(n);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) g.add_edge(u, v);
    return g;
}

inline Graph cycle_graph(int n) {
    Graph g(n);
    for (int v = 0; v < n && n > 1; ++v) g.add_edge(v, (v + 1) % n);
    return g;
}

inline Graph path_graph(int n) {
    Graph g(n);
    for (int v = 0; v + 1 < n; ++v) g.add_edge(v, v + 1);
    return g;
}

inline Graph petersen_graph() {
    Graph g(10);
    for (int i = 0; i < 5; ++i) {
        g.add_edge(i, (i + 1) % 5);
        g.add_edge(i, i + 5);
        g.add_edge(5 + i, 5 + (i + 2) % 5);
    }
    return g;
}

/// n x n queen graph: squares attack along rows, columns and diagonals.
inline Graph queen_graph(int rows, int cols) {
    Graph g(rows * cols);
    for (int a = 0; a < rows * cols; ++a)
        for (int b = a + 1; b < rows * cols; ++b) {
            const int r1 = a / cols, c1 = a % cols, r2 = b / cols, c2 = b % cols;
            if (r1 == r2 || c1 == c2 || r1 - c1 == r2 - c2 || r1 + c1 == r2 + c2) g.add_edge(a, b);
        }
    return g;
}

/// Mycielski construction: copies u_i of each v_i adjacent to N(v_i), plus a
/// hub w adjacent to every u_i. Raises the chromatic number by exactly one.
inline Graph mycielskian(const Graph& g) {
    const int n = g.order();
    Graph m(2 * n + 1);
    for (auto [u, v] : g.edges()) {
        m.add_edge(u, v);
        m.add_edge(u, n + v);
        m.add_edge(n + u, v);
    }
    for (int i = 0; i < n; ++i) m.add_edge(n + i, 2 * n);
    return m;
}

/// myciel<k> in the DIMACS naming: myciel3 is the Groetzsch graph (11 vertices).
inline Graph myciel(int k) {
    if (k < 2) throw ArgumentError("myciel index must be >= 2");
    Graph g = complete_graph(2);
    for (int i = 1; i < k; ++i) g = mycielskian(g);
    return g;
}

/// Vertex and colour ranges of one member of a disjoint union.
struct Segment {
    int vertex_begin = 0;
    int vertex_end = 0;
    int colour_begin = 0;
    int colour_end = 0;

    int vertex_count() const noexcept { return vertex_end - vertex_begin; }
    int colour_count() const noexcept { return colour_end - colour_begin; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Contiguous, non-overlapping member ranges covering a union exactly.
struct SegmentMap {
    std::vector<Segment> segments;

    std::size_t count() const noexcept { return segments.size(); }
    int total_vertices() const noexcept { return segments.empty() ? 0 : segments.back().vertex_end; }
    int total_colours() const noexcept { return segments.empty() ? 0 : segments.back().colour_end; }

    /// Member index of every vertex.
    std::vector<int> vertex_owner() const {
        std::vector<int> owner(static_cast<std::size_t>(total_vertices()));
        for (std::size_t s = 0; s < segments.size(); ++s)
            for (int v = segments[s].vertex_begin; v < segments[s].vertex_end; ++v) owner[v] = static_cast<int>(s);
        return owner;
    }
};

/// Disjoint union of `graphs`; member i contributes colours[i] colour slots.
inline std::pair<Graph, SegmentMap> disjoint_union(const std::vector<Graph>& graphs,
                                                   const std::vector<int>& colours) {
    if (graphs.empty()) throw ArgumentError("disjoint_union of an empty list");
    if (colours.size() != graphs.size())
        throw ArgumentError("disjoint_union: " + std::to_string(graphs.size()) + " graphs but " +
                            std::to_string(colours.size()) + " colour counts");
    SegmentMap map;
    int nv = 0, nc = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        if (colours[i] < 0) throw ArgumentError("negative colour count");
        map.segments.push_back({nv, nv + graphs[i].order(), nc, nc + colours[i]});
        nv += graphs[i].order();
        nc += colours[i];
    }
    Graph u(nv);
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const int off = map.segments[i].vertex_begin;
        for (auto [a, b] : graphs[i].edges()) u.add_edge(a + off, b + off);
    }
    return {std::move(u), std::move(map)};
}

}  // namespace gcpnn
