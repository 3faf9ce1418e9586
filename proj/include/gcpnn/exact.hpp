#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcpnn/error.hpp"
#include "gcpnn/graph.hpp"

namespace gcpnn {

/// A colour index per vertex; colours_used is one past the largest index.
struct Colouring {
    std::vector<int> assignment;
    int colours_used = 0;

    static Colouring from_assignment(std::vector<int> a) {
        Colouring c;
        c.colours_used = a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
        c.assignment = std::move(a);
        return c;
    }
    friend bool operator==(const Colouring&, const Colouring&) = default;
};

/// True iff no edge is monochromatic and every colour lies in [0, k).
inline bool validate_colouring(const Graph& g, const Colouring& c, int k) {
    if (static_cast<int>(c.assignment.size()) != g.order())
        throw ArgumentError("colouring covers " + std::to_string(c.assignment.size()) + " vertices, graph has " +
                            std::to_string(g.order()));
    for (int col : c.assignment)
        if (col < 0 || col >= k) return false;
    for (auto [u, v] : g.edges())
        if (c.assignment[u] == c.assignment[v]) return false;
    return true;
}

struct SearchBudget {
    std::uint64_t max_nodes = 10'000'000;
    std::chrono::milliseconds max_time{60'000};
};

enum class SolveStatus { colourable, uncolourable, timeout };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::colourable: return "colourable";
        case SolveStatus::uncolourable: return "uncolourable";
        case SolveStatus::timeout: return "timeout";
    }
    return "?";
}

struct SolveOutcome {
    SolveStatus status = SolveStatus::timeout;
    std::optional<Colouring> witness;  // set iff colourable
    std::uint64_t nodes_explored = 0;
    std::chrono::nanoseconds elapsed{0};

    bool colourable() const noexcept { return status == SolveStatus::colourable; }
};

namespace detail {

// Greedy clique: from every start vertex, repeatedly add the candidate with the
// most neighbours among the remaining candidates. Returns the largest found.
inline std::vector<Vertex> greedy_clique(const Graph& g, const std::vector<char>& active) {
    std::vector<Vertex> best;
    const int n = g.order();
    std::vector<char> cand(static_cast<std::size_t>(n));
    for (Vertex s = 0; s < n; ++s) {
        if (!active[s]) continue;
        std::vector<Vertex> clique{s};
        std::fill(cand.begin(), cand.end(), 0);
        int ncand = 0;
        for (Vertex w : g.neighbours(s))
            if (active[w]) cand[w] = 1, ++ncand;
        while (ncand > 0) {
            Vertex pick = -1;
            int pick_score = -1;
            for (Vertex v = 0; v < n; ++v) {
                if (!cand[v]) continue;
                int score = 0;
                for (Vertex w : g.neighbours(v)) score += cand[w];
                if (score > pick_score) pick_score = score, pick = v;
            }
            clique.push_back(pick);
            std::vector<char> next(static_cast<std::size_t>(n), 0);
            ncand = 0;
            for (Vertex w : g.neighbours(pick))
                if (cand[w]) next[w] = 1, ++ncand;
            cand.swap(next);
        }
        if (clique.size() > best.size()) best = clique;
    }
    return best;
}

// Backtracking k-colouring with DSATUR branching and ascending colour opening.
class DsaturSearch {
public:
    DsaturSearch(const Graph& g, int k, const std::vector<char>& active, SearchBudget budget,
                 std::chrono::steady_clock::time_point start)
        : g_(g), k_(k), active_(active), budget_(budget), start_(start),
          colour_(static_cast<std::size_t>(g.order()), -1),
          seen_(static_cast<std::size_t>(g.order()) * static_cast<std::size_t>(k), 0),
          sat_(static_cast<std::size_t>(g.order()), 0),
          free_degree_(static_cast<std::size_t>(g.order()), 0) {
        for (Vertex v = 0; v < g.order(); ++v) {
            if (!active_[v]) continue;
            ++remaining_;
            for (Vertex w : g.neighbours(v)) free_degree_[v] += active_[w];
        }
    }

    // Fixes v to colour c before the search starts (clique symmetry breaking).
    bool precolour(Vertex v, int c) {
        assign(v, c);
        used_ = std::max(used_, c + 1);
        for (Vertex w : g_.neighbours(v))
            if (active_[w] && colour_[w] < 0 && sat_[w] >= k_) return false;
        return true;
    }

    SolveStatus run() {
        const auto r = search();
        if (r == Result::found) return SolveStatus::colourable;
        if (r == Result::exhausted) return SolveStatus::uncolourable;
        return SolveStatus::timeout;
    }

    const std::vector<int>& colours() const noexcept { return colour_; }
    std::uint64_t nodes() const noexcept { return nodes_; }

private:
    enum class Result { found, exhausted, aborted };

    int& seen(Vertex v, int c) { return seen_[static_cast<std::size_t>(v) * k_ + c]; }

    void assign(Vertex v, int c) {
        colour_[v] = c;
        --remaining_;
        for (Vertex w : g_.neighbours(v)) {
            if (!active_[w]) continue;
            --free_degree_[w];
            if (seen(w, c)++ == 0) ++sat_[w];
        }
    }

    void unassign(Vertex v) {
        const int c = colour_[v];
        colour_[v] = -1;
        ++remaining_;
        for (Vertex w : g_.neighbours(v)) {
            if (!active_[w]) continue;
            ++free_degree_[w];
            if (--seen(w, c) == 0) --sat_[w];
        }
    }

    bool out_of_budget() {
        if (nodes_ >= budget_.max_nodes) return true;
        if ((nodes_ & 1023u) == 0 && std::chrono::steady_clock::now() - start_ > budget_.max_time) timed_out_ = true;
        return timed_out_;
    }

    Result search() {
        if (remaining_ == 0) return Result::found;
        ++nodes_;
        if (out_of_budget()) return Result::aborted;

        Vertex v = -1;
        for (Vertex u = 0; u < g_.order(); ++u) {
            if (!active_[u] || colour_[u] >= 0) continue;
            if (v < 0 || sat_[u] > sat_[v] || (sat_[u] == sat_[v] && free_degree_[u] > free_degree_[v])) v = u;
        }
        if (sat_[v] >= k_) return Result::exhausted;

        const int limit = std::min(k_, used_ + 1);
        for (int c = 0; c < limit; ++c) {
            if (seen(v, c) > 0) continue;
            const int saved_used = used_;
            used_ = std::max(used_, c + 1);
            assign(v, c);
            bool dead = false;
            for (Vertex w : g_.neighbours(v))
                if (active_[w] && colour_[w] < 0 && sat_[w] >= k_) {
                    dead = true;
                    break;
                }
            if (!dead) {
                const auto r = search();
                if (r != Result::exhausted) {
                    if (r == Result::aborted) {
                        unassign(v);
                        used_ = saved_used;
                    }
                    return r;
                }
            }
            unassign(v);
            used_ = saved_used;
        }
        return Result::exhausted;
    }

    const Graph& g_;
    int k_;
    const std::vector<char>& active_;
    SearchBudget budget_;
    std::chrono::steady_clock::time_point start_;
    std::vector<int> colour_;
    std::vector<int> seen_;
    std::vector<int> sat_;
    std::vector<int> free_degree_;
    int remaining_ = 0;
    int used_ = 0;
    std::uint64_t nodes_ = 0;
    bool timed_out_ = false;
};

}  // namespace detail

/// Exact k-colourability. Vertices of degree < k are peeled off first (they can
/// always be coloured afterwards); the remaining core is searched by DSATUR
/// branch and bound with a greedy clique fixed to colours 0..q-1.
inline SolveOutcome is_k_colourable(const Graph& g, int k, SearchBudget budget = {}) {
    if (k < 1) throw ArgumentError("is_k_colourable needs k >= 1");
    const auto start = std::chrono::steady_clock::now();
    const int n = g.order();
    SolveOutcome out;
    auto finish = [&](SolveStatus s) {
        out.status = s;
        out.elapsed = std::chrono::steady_clock::now() - start;
        return out;
    };

    std::vector<char> active(static_cast<std::size_t>(n), 1);
    std::vector<int> deg(static_cast<std::size_t>(n));
    std::vector<Vertex> peeled;
    for (Vertex v = 0; v < n; ++v) deg[v] = g.degree(v);
    for (bool changed = true; changed;) {
        changed = false;
        for (Vertex v = 0; v < n; ++v)
            if (active[v] && deg[v] < k) {
                active[v] = 0;
                peeled.push_back(v);
                for (Vertex w : g.neighbours(v)) --deg[w];
                changed = true;
            }
    }

    std::vector<int> colour(static_cast<std::size_t>(n), -1);
    if (static_cast<int>(peeled.size()) < n) {
        const auto clique = detail::greedy_clique(g, active);
        if (static_cast<int>(clique.size()) > k) return finish(SolveStatus::uncolourable);
        detail::DsaturSearch search(g, k, active, budget, start);
        bool ok = true;
        for (std::size_t i = 0; i < clique.size() && ok; ++i) ok = search.precolour(clique[i], static_cast<int>(i));
        const auto status = ok ? search.run() : SolveStatus::uncolourable;
        out.nodes_explored = search.nodes();
        if (status != SolveStatus::colourable) return finish(status);
        for (Vertex v = 0; v < n; ++v)
            if (active[v]) colour[v] = search.colours()[v];
    }
    // Re-insert peeled vertices in reverse order; each sees fewer than k coloured neighbours.
    std::vector<char> taken(static_cast<std::size_t>(k));
    for (auto it = peeled.rbegin(); it != peeled.rend(); ++it) {
        std::fill(taken.begin(), taken.end(), 0);
        for (Vertex w : g.neighbours(*it))
            if (colour[w] >= 0) taken[colour[w]] = 1;
        colour[*it] = static_cast<int>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
    }
    out.witness = Colouring::from_assignment(std::move(colour));
    return finish(SolveStatus::colourable);
}

/// Sequential DSATUR heuristic colouring (no backtracking).
inline Colouring dsatur_colouring(const Graph& g) {
    const int n = g.order();
    std::vector<int> colour(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<char>> seen(static_cast<std::size_t>(n));
    std::vector<int> sat(static_cast<std::size_t>(n), 0);
    for (int step = 0; step < n; ++step) {
        Vertex v = -1;
        for (Vertex u = 0; u < n; ++u) {
            if (colour[u] >= 0) continue;
            if (v < 0 || sat[u] > sat[v] || (sat[u] == sat[v] && g.degree(u) > g.degree(v))) v = u;
        }
        int c = 0;
        while (c < static_cast<int>(seen[v].size()) && seen[v][c]) ++c;
        colour[v] = c;
        for (Vertex w : g.neighbours(v)) {
            if (static_cast<int>(seen[w].size()) <= c) seen[w].resize(static_cast<std::size_t>(c) + 1, 0);
            if (!seen[w][c]) seen[w][c] = 1, ++sat[w];
        }
    }
    return Colouring::from_assignment(std::move(colour));
}

/// Result of a chromatic-number computation. When `exact` is false the search
/// ran out of budget and only [lower, upper] is known.
struct ChromaticResult {
    bool exact = false;
    int chi = 0;
    int lower = 0;
    int upper = 0;
    Colouring witness;
    std::uint64_t nodes_explored = 0;
};

/// Ascends from a greedy-clique lower bound towards the DSATUR upper bound.
/// The budget covers the whole ascent.
inline ChromaticResult chromatic_number(const Graph& g, SearchBudget budget = {}) {
    const auto start = std::chrono::steady_clock::now();
    ChromaticResult r;
    r.witness = dsatur_colouring(g);
    r.upper = r.witness.colours_used;
    const std::vector<char> all(static_cast<std::size_t>(g.order()), 1);
    r.lower = std::max<int>(1, static_cast<int>(detail::greedy_clique(g, all).size()));
    for (int k = r.lower; k < r.upper; ++k) {
        SearchBudget left = budget;
        left.max_nodes = budget.max_nodes > r.nodes_explored ? budget.max_nodes - r.nodes_explored : 0;
        left.max_time = std::chrono::duration_cast<std::chrono::milliseconds>(
            budget.max_time - (std::chrono::steady_clock::now() - start));
        if (left.max_nodes == 0 || left.max_time.count() <= 0) return r;
        const auto o = is_k_colourable(g, k, left);
        r.nodes_explored += o.nodes_explored;
        if (o.status == SolveStatus::timeout) return r;
        if (o.colourable()) {
            r.witness = *o.witness;
            r.upper = k;
            break;
        }
        r.lower = k + 1;
    }
    r.exact = true;
    r.chi = r.upper;
    r.lower = r.upper;
    return r;
}

/// Exhaustive oracle: tries every assignment with k = 1, 2, ... colours.
inline int brute_force_chromatic(const Graph& g) {
    const int n = g.order();
    if (n > 10) throw ArgumentError("brute_force_chromatic refuses n > 10 (n=" + std::to_string(n) + ")");
    for (int k = 1; k <= n; ++k) {
        std::vector<int> a(static_cast<std::size_t>(n), 0);
        while (true) {
            bool ok = true;
            for (auto [u, v] : g.edges())
                if (a[u] == a[v]) {
                    ok = false;
                    break;
                }
            if (ok) return k;
            int i = 0;
            while (i < n && ++a[i] == k) a[i++] = 0;
            if (i == n) break;
        }
    }
    return n;
}

}  // namespace gcpnn
