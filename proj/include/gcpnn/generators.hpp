#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gcpnn/error.hpp"
#include "gcpnn/graph.hpp"
#include "gcpnn/rng.hpp"

namespace gcpnn {

/// Erdos-Renyi G(n, p): every pair u < v independently, in lexicographic order.
inline Graph random_density_graph(int n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("edge probability must lie in [0, 1], got " + std::to_string(p));
    if (n < 1) throw ArgumentError("n must be >= 1");
    Rng rng(seed);
    Graph g(n);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) g.add_edge(u, v);
    return g;
}

/// Random tree whose degree sequence is drawn from a power law with exponent
/// `gamma`. Degrees are rounded Pareto(gamma - 1) draws; single entries are
/// redrawn until the sequence sums to 2(n - 1), then a uniformly random tree
/// with that degree sequence is built through a shuffled Pruefer code.
inline Graph powerlaw_tree(int n, double gamma, std::uint64_t seed, int max_tries = 10000) {
    if (n < 2) throw ArgumentError("powerlaw_tree needs n >= 2");
    if (!(gamma > 1.0)) throw ArgumentError("powerlaw exponent must exceed 1");
    Rng rng(seed);
    auto draw = [&] {
        const double x = std::pow(1.0 - rng.uniform(), -1.0 / (gamma - 1.0));
        return static_cast<long long>(std::min<double>(std::round(x), n - 1));
    };
    std::vector<long long> deg(static_cast<std::size_t>(n));
    for (auto& d : deg) d = draw();
    const long long target = 2LL * (n - 1);
    long long sum = std::accumulate(deg.begin(), deg.end(), 0LL);
    int tries = 0;
    while (sum != target) {
        if (tries++ >= max_tries)
            throw GenerationError("powerlaw_tree: no valid degree sequence after " + std::to_string(max_tries) +
                                  " redraws");
        const auto i = rng.below(static_cast<std::uint64_t>(n));
        sum -= deg[i];
        deg[i] = draw();
        sum += deg[i];
    }
    std::vector<int> code;
    for (int v = 0; v < n; ++v)
        for (long long k = 1; k < deg[v]; ++k) code.push_back(v);
    rng.shuffle(code.begin(), code.end());

    // Pruefer decoding with remaining-degree counters.
    std::vector<long long> left = deg;
    Graph g(n);
    std::set<int> leaves;
    for (int v = 0; v < n; ++v)
        if (left[v] == 1) leaves.insert(v);
    for (int v : code) {
        const int leaf = *leaves.begin();
        leaves.erase(leaves.begin());
        g.add_edge(leaf, v);
        if (--left[v] == 1) leaves.insert(v);
    }
    const int a = *leaves.begin();
    const int b = *std::next(leaves.begin());
    g.add_edge(a, b);
    return g;
}

/// Watts-Strogatz small world: ring lattice with k/2 neighbours per side, each
/// lattice edge (u, u+j) rewired with probability p to a uniformly drawn
/// target. Targets that would form a self-loop or duplicate are redrawn, so
/// the edge count stays n*k/2.
inline Graph watts_strogatz(int n, int k, double p, std::uint64_t seed) {
    if (k >= n) throw ArgumentError("watts_strogatz needs k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    if (k < 0 || k % 2 != 0) throw ArgumentError("watts_strogatz needs an even k >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("rewire probability must lie in [0, 1]");
    Rng rng(seed);
    std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
    auto link = [&](int a, int b) { adj[a].insert(b); adj[b].insert(a); };
    auto unlink = [&](int a, int b) { adj[a].erase(b); adj[b].erase(a); };
    for (int u = 0; u < n; ++u)
        for (int j = 1; j <= k / 2; ++j) link(u, (u + j) % n);
    for (int j = 1; j <= k / 2; ++j)
        for (int u = 0; u < n; ++u) {
            const int v = (u + j) % n;
            if (!adj[u].count(v) || !rng.bernoulli(p)) continue;
            if (static_cast<int>(adj[u].size()) >= n - 1) continue;  // nowhere to go
            int w;
            do w = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            while (w == u || adj[u].count(w));
            unlink(u, v);
            link(u, w);
        }
    Graph g(n);
    for (int u = 0; u < n; ++u)
        for (int v : adj[u])
            if (u < v) g.add_edge(u, v);
    return g;
}

/// Holme-Kim growth: preferential attachment with m edges per new vertex,
/// where after each attachment a triad-closing edge to a neighbour of the
/// last target is made with probability p.
inline Graph holme_kim(int n, int m, double p, std::uint64_t seed) {
    if (m < 1 || m >= n) throw ArgumentError("holme_kim needs 1 <= m < n (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("triad probability must lie in [0, 1]");
    Rng rng(seed);
    Graph g(n);
    std::vector<int> repeated(static_cast<std::size_t>(m));
    std::iota(repeated.begin(), repeated.end(), 0);

    auto random_subset = [&](std::size_t count) {
        std::vector<int> picked;
        std::set<int> seen;
        while (picked.size() < count) {
            const int x = repeated[rng.below(repeated.size())];
            if (seen.insert(x).second) picked.push_back(x);
        }
        return picked;
    };

    for (int source = m; source < n; ++source) {
        auto targets = random_subset(static_cast<std::size_t>(m));
        int target = targets.back();
        targets.pop_back();
        g.add_edge(source, target);
        repeated.push_back(target);
        int count = 1;
        while (count < m) {
            if (rng.bernoulli(p)) {
                std::vector<int> hood;
                for (int w : g.neighbours(target))
                    if (w != source && !g.has_edge(source, w)) hood.push_back(w);
                if (!hood.empty()) {
                    const int w = hood[rng.below(hood.size())];
                    g.add_edge(source, w);
                    repeated.push_back(w);
                    ++count;
                    continue;
                }
            }
            // skip targets already joined by a triad step
            while (!targets.empty()) {
                target = targets.back();
                targets.pop_back();
                if (g.add_edge(source, target)) {
                    repeated.push_back(target);
                    break;
                }
            }
            ++count;
        }
        repeated.insert(repeated.end(), static_cast<std::size_t>(m), source);
    }
    return g;
}

}  // namespace gcpnn
