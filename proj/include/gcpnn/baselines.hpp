#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gcpnn/error.hpp"
#include "gcpnn/exact.hpp"
#include "gcpnn/graph.hpp"
#include "gcpnn/rng.hpp"

namespace gcpnn {

enum class GreedyOrder { degree_descending, natural };

/// First-fit colouring along the given vertex order. Degree order breaks ties
/// by vertex index.
inline Colouring greedy_colouring(const Graph& g, GreedyOrder order = GreedyOrder::degree_descending) {
    const int n = g.order();
    std::vector<Vertex> seq(static_cast<std::size_t>(n));
    std::iota(seq.begin(), seq.end(), 0);
    if (order == GreedyOrder::degree_descending)
        std::stable_sort(seq.begin(), seq.end(), [&](Vertex a, Vertex b) { return g.degree(a) > g.degree(b); });
    std::vector<int> colour(static_cast<std::size_t>(n), -1);
    std::vector<int> stamp(static_cast<std::size_t>(n) + 1, -1);
    for (Vertex v : seq) {
        for (Vertex w : g.neighbours(v))
            if (colour[w] >= 0) stamp[colour[w]] = v;
        int c = 0;
        while (stamp[c] == v) ++c;
        colour[v] = c;
    }
    return Colouring::from_assignment(std::move(colour));
}

/// Tabucol parameters. The tabu tenure of a move is
///   U{0..tenure_base} + floor(tenure_slope * conflicts)
/// where conflicts is the objective at the time the move is made.
struct TabucolParams {
    std::uint64_t max_iterations = 50'000;
    int tenure_base = 9;
    double tenure_slope = 0.6;
    std::uint64_t seed = 0;
};

struct TabucolResult {
    bool success = false;
    Colouring colouring;  // a valid k-colouring on success, else the best assignment found
    int best_conflicts = 0;
    std::uint64_t iterations = 0;
    std::vector<int> best_trace;  // best-so-far objective, one entry per improvement
};

/// Tabu search over complete k-assignments minimising monochromatic edges.
/// A move recolours one conflicting vertex; the (vertex, old colour) pair is
/// then tabu. Aspiration admits tabu moves that beat the best objective seen.
inline TabucolResult tabucol(const Graph& g, int k, const TabucolParams& params = {}) {
    if (k < 1) throw ArgumentError("tabucol needs k >= 1");
    if (params.max_iterations < 1 || params.tenure_base < 0 || params.tenure_slope < 0)
        throw ArgumentError("tabucol: max_iterations >= 1 and non-negative tenures required");
    const int n = g.order();
    Rng rng(params.seed);
    std::vector<int> col(static_cast<std::size_t>(n));
    for (auto& c : col) c = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));

    // gamma[v*k + c] = neighbours of v currently coloured c
    std::vector<int> gamma(static_cast<std::size_t>(n) * k, 0);
    auto gm = [&](Vertex v, int c) -> int& { return gamma[static_cast<std::size_t>(v) * k + c]; };
    int conflicts = 0;
    for (auto [u, v] : g.edges()) {
        ++gm(u, col[v]);
        ++gm(v, col[u]);
        conflicts += col[u] == col[v];
    }
    std::vector<std::uint64_t> tabu_until(static_cast<std::size_t>(n) * k, 0);

    TabucolResult res;
    res.best_conflicts = conflicts;
    res.best_trace.push_back(conflicts);
    std::vector<int> best = col;

    std::uint64_t it = 0;
    // with one colour there is no move to make
    while (k > 1 && conflicts > 0 && it < params.max_iterations) {
        ++it;
        int best_delta = 0;
        Vertex mv = -1;
        int mc = -1;
        std::uint64_t ties = 0;
        for (Vertex v = 0; v < n; ++v) {
            const int cur = gm(v, col[v]);
            if (cur == 0) continue;
            for (int c = 0; c < k; ++c) {
                if (c == col[v]) continue;
                const int delta = gm(v, c) - cur;
                const bool tabu = tabu_until[static_cast<std::size_t>(v) * k + c] > it;
                if (tabu && conflicts + delta >= res.best_conflicts) continue;
                if (mv < 0 || delta < best_delta) {
                    best_delta = delta, mv = v, mc = c, ties = 1;
                } else if (delta == best_delta && rng.below(++ties) == 0) {
                    mv = v, mc = c;
                }
            }
        }
        if (mv < 0) {
            // every move is tabu: recolour a random conflicting vertex
            std::vector<Vertex> conflicting;
            for (Vertex v = 0; v < n; ++v)
                if (gm(v, col[v]) > 0) conflicting.push_back(v);
            mv = conflicting[rng.below(conflicting.size())];
            mc = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
            if (mc >= col[mv]) ++mc;
            best_delta = gm(mv, mc) - gm(mv, col[mv]);
        }
        const int old = col[mv];
        for (Vertex w : g.neighbours(mv)) {
            --gm(w, old);
            ++gm(w, mc);
        }
        col[mv] = mc;
        conflicts += best_delta;
        const auto tenure = static_cast<std::uint64_t>(rng.below(static_cast<std::uint64_t>(params.tenure_base) + 1)) +
                            static_cast<std::uint64_t>(params.tenure_slope * conflicts);
        tabu_until[static_cast<std::size_t>(mv) * k + old] = it + tenure + 1;
        if (conflicts < res.best_conflicts) {
            res.best_conflicts = conflicts;
            res.best_trace.push_back(conflicts);
            best = col;
        }
    }
    res.iterations = it;
    res.success = res.best_conflicts == 0;
    res.colouring = Colouring::from_assignment(std::move(best));
    return res;
}

/// Smallest k in [2, upper] for which tabucol finds a k-colouring; nullopt is
/// the NA outcome. Each k gets its own seed derived from params.seed.
inline std::optional<int> tabucol_chromatic(const Graph& g, int upper, const TabucolParams& params = {},
                                            Colouring* witness = nullptr) {
    if (upper < 2) throw ArgumentError("tabucol_chromatic needs upper >= 2");
    for (int k = 2; k <= upper; ++k) {
        TabucolParams p = params;
        p.seed = derive_seed(params.seed, {static_cast<std::uint64_t>(k)});
        auto r = tabucol(g, k, p);
        if (r.success) {
            if (witness) *witness = std::move(r.colouring);
            return k;
        }
    }
    return std::nullopt;
}

/// CNF over 1-based variables; literals are +/- variable indices.
struct CnfFormula {
    int num_vars = 0;
    std::vector<std::vector<int>> clauses;
};

/// Variable index of "vertex v takes colour c" in gcp_to_sat's encoding.
constexpr int colour_var(int v, int c, int k) { return v * k + c + 1; }

/// Standard direct encoding: one at-least-one clause per vertex, one
/// not-both clause per edge and colour, pairwise at-most-one clauses.
inline CnfFormula gcp_to_sat(const Graph& g, int k) {
    if (k < 1) throw ArgumentError("gcp_to_sat needs k >= 1");
    CnfFormula f;
    f.num_vars = g.order() * k;
    for (Vertex v = 0; v < g.order(); ++v) {
        std::vector<int> alo;
        for (int c = 0; c < k; ++c) alo.push_back(colour_var(v, c, k));
        f.clauses.push_back(std::move(alo));
    }
    for (auto [u, v] : g.edges())
        for (int c = 0; c < k; ++c) f.clauses.push_back({-colour_var(u, c, k), -colour_var(v, c, k)});
    for (Vertex v = 0; v < g.order(); ++v)
        for (int c = 0; c < k; ++c)
            for (int d = c + 1; d < k; ++d) f.clauses.push_back({-colour_var(v, c, k), -colour_var(v, d, k)});
    return f;
}

inline void write_dimacs_cnf(std::ostream& out, const CnfFormula& f) {
    out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
    for (const auto& cl : f.clauses) {
        for (int lit : cl) out << lit << ' ';
        out << "0\n";
    }
}

}  // namespace gcpnn
