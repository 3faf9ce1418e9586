#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gcpnn/error.hpp"
#include "gcpnn/exact.hpp"
#include "gcpnn/generators.hpp"
#include "gcpnn/graph.hpp"
#include "gcpnn/rng.hpp"

namespace gcpnn {

/// Decision instance "does `graph` admit a `target_c`-colouring?".
struct GcpInstance {
    Graph graph;
    int target_c = 0;
    bool label = false;
    int chi = 0;
    std::optional<Edge> frozen_edge;
    std::string source;

    friend bool operator==(const GcpInstance&, const GcpInstance&) = default;
};

struct DatasetMeta {
    int pairs = 0;
    int n_min = 40, n_max = 60;
    int chi_min = 3, chi_max = 8;
    std::uint64_t seed = 0;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// Adjacent (positive, negative) pairs; instance 2i is the colourable one.
struct Dataset {
    std::vector<GcpInstance> instances;
    DatasetMeta meta;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// ---------------------------------------------------------------------------
// Density calibration

/// Rows of the shipped calibration table: for each vertex count, the edge
/// probability at which the median exact chromatic number of G(n, p) equals
/// chi, for chi = 3..8. Produced by `calibrate_density` (see `gcpnn calibrate`).
struct DensityRow {
    int n;
    std::array<double, 6> p;
};

// samples=15, steps=10, seed 0xC0FFEE + n; chi > n entries are 1.0
inline constexpr std::array<DensityRow, 8> kDensityTable{{
    {5, {0.6333, 0.8682, 0.9751, 1.0000, 1.0000, 1.0000}},
    {10, {0.3027, 0.5073, 0.7163, 0.8306, 0.8848, 0.9375}},
    {15, {0.1450, 0.3047, 0.4746, 0.5952, 0.6978, 0.7920}},
    {20, {0.1392, 0.2905, 0.4272, 0.5415, 0.6372, 0.7065}},
    {30, {0.0957, 0.1973, 0.3086, 0.4092, 0.5000, 0.5786}},
    {40, {0.0713, 0.1514, 0.2314, 0.3096, 0.3960, 0.4697}},
    {50, {0.0586, 0.1265, 0.1973, 0.2671, 0.3369, 0.4067}},
    {60, {0.0503, 0.1074, 0.1689, 0.2310, 0.2900, 0.3521}},
}};

inline constexpr int kMinCalibratedChi = 3;
inline constexpr int kMaxCalibratedChi = 8;

/// Median of the exact chromatic number over `samples` draws of G(n, p).
/// Draws the exact solver cannot close are skipped.
inline double median_chi(int n, double p, int samples, std::uint64_t seed, SearchBudget budget = {}) {
    std::vector<int> chis;
    for (int s = 0; s < samples; ++s) {
        const Graph g = random_density_graph(n, p, derive_seed(seed, {static_cast<std::uint64_t>(s)}));
        const auto r = chromatic_number(g, budget);
        if (r.exact) chis.push_back(r.chi);
    }
    if (chis.empty()) return 0.0;
    std::sort(chis.begin(), chis.end());
    const auto m = chis.size();
    return m % 2 ? chis[m / 2] : 0.5 * (chis[m / 2 - 1] + chis[m / 2]);
}

/// Sweep tool behind the density table: bisects for the smallest p whose
/// median chi reaches `chi` and the smallest whose median reaches chi + 1,
/// and returns the midpoint of that window.
inline double calibrate_density(int chi, int n, int samples, std::uint64_t seed, int steps = 12,
                                SearchBudget budget = {}) {
    if (n < chi) throw ArgumentError("calibrate_density needs n >= chi");
    auto threshold = [&](int target) {
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < steps; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (median_chi(n, mid, samples, seed, budget) >= target) hi = mid;
            else lo = mid;
        }
        return hi;
    };
    const double enter = threshold(chi);
    const double leave = chi + 1 <= n ? threshold(chi + 1) : 1.0;
    return 0.5 * (enter + leave);
}

/// Starting edge probability for forging a pair with chromatic number `chi`
/// on `n` vertices: linear interpolation of the calibration table in n,
/// clamped to the table's n range.
inline double target_density(int chi, int n) {
    if (chi < kMinCalibratedChi || chi > kMaxCalibratedChi)
        throw ArgumentError("target_density calibrated for chi in [3, 8], got " + std::to_string(chi));
    if (n < chi) throw ArgumentError("target_density needs n >= chi");
    const auto col = static_cast<std::size_t>(chi - kMinCalibratedChi);
    const auto& t = kDensityTable;
    double p;
    if (n <= t.front().n) {
        p = t.front().p[col];
    } else if (n >= t.back().n) {
        p = t.back().p[col];
    } else {
        std::size_t i = 0;
        while (t[i + 1].n < n) ++i;
        const double w = static_cast<double>(n - t[i].n) / (t[i + 1].n - t[i].n);
        p = (1 - w) * t[i].p[col] + w * t[i + 1].p[col];
    }
    return std::clamp(p, 0.01, 1.0);
}

// ---------------------------------------------------------------------------
// Pair forging

struct ForgeOptions {
    int max_attempts = 500;
    SearchBudget budget{};
};

/// Draws G(n, p) at the calibrated density until the exact chromatic number is
/// `chi`, then adds uniformly random absent edges until the graph stops being
/// chi-colourable. The last colourable graph and its one-edge extension form
/// the pair; the extra edge is the frozen edge. Draws the solver cannot label
/// within budget are discarded.
inline std::pair<GcpInstance, GcpInstance> forge_pair(int n, int chi, std::uint64_t seed,
                                                      const ForgeOptions& opt = {}) {
    if (chi < kMinCalibratedChi || chi > kMaxCalibratedChi)
        throw ArgumentError("forge_pair needs chi in [3, 8], got " + std::to_string(chi));
    if (n < chi) throw ArgumentError("forge_pair needs n >= chi");
    const double p = target_density(chi, n);
    for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
        const auto s = derive_seed(seed, {static_cast<std::uint64_t>(attempt)});
        Graph g = random_density_graph(n, p, s);
        const auto start = chromatic_number(g, opt.budget);
        if (!start.exact || start.chi != chi) continue;

        std::vector<int> witness = start.witness.assignment;
        auto absent = g.non_edges();
        Rng rng(derive_seed(s, {1}));
        rng.shuffle(absent.begin(), absent.end());
        for (auto [u, v] : absent) {
            if (witness[u] != witness[v]) {
                g.add_edge(u, v);  // the current witness still colours g
                continue;
            }
            Graph next = g;
            next.add_edge(u, v);
            const auto o = is_k_colourable(next, chi, opt.budget);
            if (o.status == SolveStatus::timeout) break;
            if (o.colourable()) {
                g = std::move(next);
                witness = o.witness->assignment;
                continue;
            }
            const std::string tag = "forge:n=" + std::to_string(n) + ",chi=" + std::to_string(chi) +
                                    ",attempt=" + std::to_string(attempt);
            GcpInstance pos{std::move(g), chi, true, chi, Edge{u, v}, tag};
            GcpInstance neg{std::move(next), chi, false, chi + 1, Edge{u, v}, tag};
            return {std::move(pos), std::move(neg)};
        }
    }
    throw GenerationError("forge_pair(n=" + std::to_string(n) + ", chi=" + std::to_string(chi) + "): no pair after " +
                          std::to_string(opt.max_attempts) + " attempts");
}

/// `count` pairs with n ~ U[n_min, n_max] and chi ~ U[chi_min, chi_max].
/// Pair i depends only on (seed, i), so the result is identical for any
/// number of worker threads.
inline Dataset build_dataset(int count, std::pair<int, int> n_range, std::pair<int, int> chi_range,
                             std::uint64_t seed, const ForgeOptions& opt = {}, unsigned jobs = 1,
                             const std::function<void(int, int)>& progress = {}) {
    if (count < 1) throw ArgumentError("build_dataset needs count >= 1");
    if (n_range.first > n_range.second || chi_range.first > chi_range.second)
        throw ArgumentError("build_dataset: empty n or chi range");
    Dataset d;
    d.meta = {count, n_range.first, n_range.second, chi_range.first, chi_range.second, seed};
    std::vector<std::optional<std::pair<GcpInstance, GcpInstance>>> pairs(static_cast<std::size_t>(count));
    std::atomic<int> next{0}, done{0};
    std::mutex err_mu;
    std::string first_error;
    int first_error_index = count;

    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i), 0}));
                const int n = static_cast<int>(rng.between(n_range.first, n_range.second));
                const int chi = static_cast<int>(rng.between(chi_range.first, chi_range.second));
                pairs[i] = forge_pair(n, chi, derive_seed(seed, {static_cast<std::uint64_t>(i), 1}), opt);
                pairs[i]->first.source += ",pair=" + std::to_string(i);
                pairs[i]->second.source += ",pair=" + std::to_string(i);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                if (i < first_error_index) first_error_index = i, first_error = e.what();
            }
            const int k = ++done;
            if (progress) {
                std::lock_guard lock(err_mu);
                progress(k, count);
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < std::max(1u, jobs); ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (first_error_index < count) {
        int ok = 0;
        for (const auto& p : pairs) ok += p.has_value();
        throw GenerationError("build_dataset: pair " + std::to_string(first_error_index) + " failed (" +
                              std::to_string(ok) + "/" + std::to_string(count) + " pairs forged): " + first_error);
    }
    for (auto& p : pairs) {
        d.instances.push_back(std::move(p->first));
        d.instances.push_back(std::move(p->second));
    }
    return d;
}

// ---------------------------------------------------------------------------
// JSONL persistence

inline nlohmann::json to_json(const GcpInstance& x) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [u, v] : x.graph.edges()) edges.push_back({u, v});
    nlohmann::json j;
    j["n"] = x.graph.order();
    j["edges"] = std::move(edges);
    j["chi"] = x.chi;
    j["target_c"] = x.target_c;
    j["label"] = x.label;
    j["frozen_edge"] = x.frozen_edge ? nlohmann::json{x.frozen_edge->first, x.frozen_edge->second} : nlohmann::json();
    j["source"] = x.source;
    return j;
}

inline GcpInstance instance_from_json(const nlohmann::json& j) {
    GcpInstance x;
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    x.graph = Graph(j.at("n").get<int>(), edges);
    x.chi = j.at("chi").get<int>();
    x.target_c = j.at("target_c").get<int>();
    x.label = j.at("label").get<bool>();
    if (j.contains("frozen_edge") && !j["frozen_edge"].is_null())
        x.frozen_edge = Edge{j["frozen_edge"].at(0).get<int>(), j["frozen_edge"].at(1).get<int>()};
    if (j.contains("source")) x.source = j["source"].get<std::string>();
    return x;
}

/// First line: metadata header; then one instance per line (0-indexed edges).
inline void save_dataset(const Dataset& d, std::ostream& out) {
    nlohmann::json h;
    h["format"] = "gcpnn-dataset";
    h["version"] = 1;
    h["pairs"] = d.meta.pairs;
    h["n_min"] = d.meta.n_min;
    h["n_max"] = d.meta.n_max;
    h["chi_min"] = d.meta.chi_min;
    h["chi_max"] = d.meta.chi_max;
    h["seed"] = d.meta.seed;
    h["instances"] = d.instances.size();
    out << h.dump() << '\n';
    for (const auto& x : d.instances) out << to_json(x).dump() << '\n';
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    save_dataset(d, out);
}

inline Dataset load_dataset(std::istream& in) {
    Dataset d;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!header) {
                if (j.value("format", "") != "gcpnn-dataset") throw ParseError("missing dataset header", lineno);
                d.meta.pairs = j.at("pairs").get<int>();
                d.meta.n_min = j.at("n_min").get<int>();
                d.meta.n_max = j.at("n_max").get<int>();
                d.meta.chi_min = j.at("chi_min").get<int>();
                d.meta.chi_max = j.at("chi_max").get<int>();
                d.meta.seed = j.at("seed").get<std::uint64_t>();
                header = true;
                continue;
            }
            d.instances.push_back(instance_from_json(j));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("malformed dataset line: ") + e.what(), lineno);
        }
    }
    if (!header) throw ParseError("empty dataset file", lineno);
    return d;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return load_dataset(in);
}

// ---------------------------------------------------------------------------
// Label audit

struct AuditReport {
    std::size_t instances_checked = 0;
    std::size_t unresolved = 0;  // solver ran out of budget
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty() && unresolved == 0; }
};

/// Re-derives every label with the exact solver and checks the pair structure:
/// balance, single frozen edge per pair, chi = C for positives, chi = C + 1
/// for negatives.
inline AuditReport audit_dataset(const Dataset& d, SearchBudget budget = {}) {
    AuditReport rep;
    auto fail = [&](std::size_t i, const std::string& what) {
        rep.violations.push_back("instance " + std::to_string(i) + ": " + what);
    };
    std::size_t positives = 0;
    for (const auto& x : d.instances) positives += x.label;
    if (2 * positives != d.instances.size())
        rep.violations.push_back("unbalanced: " + std::to_string(positives) + " positive of " +
                                 std::to_string(d.instances.size()));
    if (d.instances.size() % 2) rep.violations.push_back("odd instance count");

    for (std::size_t i = 0; i < d.instances.size(); ++i) {
        const auto& x = d.instances[i];
        ++rep.instances_checked;
        const int c = x.target_c;
        if (x.label != (x.chi <= c)) fail(i, "label disagrees with stored chi");
        if (x.frozen_edge && x.graph.has_edge(x.frozen_edge->first, x.frozen_edge->second) == x.label)
            fail(i, "frozen edge membership disagrees with label");

        // chi == expected  <=>  (expected)-colourable and not (expected - 1)-colourable
        const int expected = x.label ? c : c + 1;
        const auto up = is_k_colourable(x.graph, expected, budget);
        const auto down = expected > 1 ? is_k_colourable(x.graph, expected - 1, budget) : SolveOutcome{};
        if (up.status == SolveStatus::timeout || (expected > 1 && down.status == SolveStatus::timeout)) {
            ++rep.unresolved;
            continue;
        }
        if (!up.colourable()) fail(i, "not " + std::to_string(expected) + "-colourable");
        if (expected > 1 && down.colourable()) fail(i, "chi below " + std::to_string(expected));
        if (x.chi != expected) fail(i, "stored chi " + std::to_string(x.chi) + " but expected " + std::to_string(expected));
    }

    for (std::size_t i = 0; i + 1 < d.instances.size(); i += 2) {
        const auto& pos = d.instances[i];
        const auto& neg = d.instances[i + 1];
        if (!pos.label || neg.label) {
            fail(i, "pair not ordered (positive, negative)");
            continue;
        }
        if (pos.target_c != neg.target_c || pos.graph.order() != neg.graph.order()) {
            fail(i, "pair members disagree on C or n");
            continue;
        }
        if (neg.graph.size() != pos.graph.size() + 1) {
            fail(i, "pair does not differ by exactly one edge");
            continue;
        }
        std::vector<Edge> extra;
        std::set_difference(neg.graph.edges().begin(), neg.graph.edges().end(), pos.graph.edges().begin(),
                            pos.graph.edges().end(), std::back_inserter(extra));
        if (extra.size() != 1) fail(i, "negative is not a one-edge extension of the positive");
        else if (neg.frozen_edge && *neg.frozen_edge != extra.front()) fail(i, "frozen edge is not the extra edge");
    }
    return rep;
}

}  // namespace gcpnn
