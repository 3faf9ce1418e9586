#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gcpnn/baselines.hpp"
#include "gcpnn/dimacs.hpp"
#include "gcpnn/embed.hpp"
#include "gcpnn/error.hpp"
#include "gcpnn/exact.hpp"
#include "gcpnn/forge.hpp"
#include "gcpnn/model.hpp"

namespace gcpnn {

inline constexpr int kSweepMargin = 3;

/// First C in 2..chi_ref+3 whose answer is >= 0.5; nullopt (NA) otherwise.
inline std::optional<int> sweep_chromatic(const std::function<double(int)>& answer, int chi_ref) {
    for (int c = 2; c <= chi_ref + kSweepMargin; ++c)
        if (answer(c) >= 0.5) return c;
    return std::nullopt;
}

struct SweepOptions {
    int t_max = 32;
    std::uint64_t seed = 0;
    int votes = 1;  // colour resamples per C; majority decides
};

/// Seed for the colour embeddings of (graph, C, vote); fixed so sweeps replay.
inline std::uint64_t sweep_seed(std::uint64_t seed, int c, int vote) {
    return derive_seed(seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(vote)});
}

/// Model answers for C = 2..chi_ref+3 on one graph, evaluated as one batch.
/// Element i is the (vote-averaged) decision for C = i + 2 expressed as the
/// fraction of votes that were positive, or the probability when votes == 1.
inline std::vector<double> sweep_answers(const ModelParams& p, const Graph& g, int chi_ref, const SweepOptions& opt) {
    const int top = chi_ref + kSweepMargin;
    std::vector<double> out;
    if (top < 2) return out;
    std::vector<Graph> gs;
    std::vector<int> cs;
    for (int c = 2; c <= top; ++c) {
        gs.push_back(g);
        cs.push_back(c);
    }
    const Batch b = build_batch(gs, cs);
    std::vector<double> positive(cs.size(), 0.0), prob(cs.size(), 0.0);
    for (int v = 0; v < std::max(1, opt.votes); ++v) {
        Matrix colours(b.segments.total_colours(), p.d);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            Rng rng(sweep_seed(opt.seed, cs[i], v));
            const auto& s = b.segments.segments[i];
            for (int slot = s.colour_begin; slot < s.colour_end; ++slot)
                for (int j = 0; j < p.d; ++j) colours(slot, j) = rng.uniform();
        }
        const auto r = forward(p, b, opt.t_max, colours);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            positive[i] += r.prediction[i] >= 0.5;
            prob[i] = r.prediction[i];
        }
    }
    if (opt.votes <= 1) return prob;
    for (auto& x : positive) x /= opt.votes;
    return positive;
}

inline std::optional<int> predict_chromatic(const ModelParams& p, const Graph& g, int chi_ref,
                                            const SweepOptions& opt = {}) {
    const auto answers = sweep_answers(p, g, chi_ref, opt);
    return sweep_chromatic([&](int c) { return answers[static_cast<std::size_t>(c - 2)]; }, chi_ref);
}

// ---------------------------------------------------------------------------

struct CurvePoint {
    int offset = 0;
    double mean_prediction = 0.0;
    std::size_t count = 0;
    std::size_t skipped = 0;  // instances where chi + offset < 2
};

inline constexpr int kCurveOffsets[] = {-2, -1, 0, 1, 2};

/// Mean prediction at C = chi + offset, offset in -2..+2, over `instances`.
inline std::vector<CurvePoint> acceptance_curve(const ModelParams& p, const std::vector<GcpInstance>& instances,
                                                int t_max, std::uint64_t seed) {
    std::vector<CurvePoint> curve;
    for (int off : kCurveOffsets) curve.push_back({off, 0.0, 0, 0});
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& x = instances[i];
        std::vector<Graph> gs;
        std::vector<int> cs;
        std::vector<std::size_t> slot;
        for (std::size_t k = 0; k < curve.size(); ++k) {
            const int c = x.chi + curve[k].offset;
            if (c < 2) {
                ++curve[k].skipped;
                continue;
            }
            gs.push_back(x.graph);
            cs.push_back(c);
            slot.push_back(k);
        }
        if (gs.empty()) continue;
        const auto r = forward(p, build_batch(gs, cs), t_max, derive_seed(seed, {i}));
        for (std::size_t j = 0; j < slot.size(); ++j) {
            curve[slot[j]].mean_prediction += r.prediction[j];
            ++curve[slot[j]].count;
        }
    }
    for (auto& c : curve)
        if (c.count) c.mean_prediction /= static_cast<double>(c.count);
    return curve;
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "offset,mean_prediction,count,skipped\n";
    for (const auto& c : curve) out << c.offset << ',' << c.mean_prediction << ',' << c.count << ',' << c.skipped << '\n';
}

// ---------------------------------------------------------------------------

/// Predicted-vs-true chromatic numbers. NA predictions are kept out of the
/// deviation and counted separately.
struct EvalReport {
    std::map<int, std::map<int, std::size_t>> matrix;  // [true][predicted]; predicted -1 is NA
    std::map<int, double> accuracy_by_chi;
    std::map<int, std::size_t> count_by_chi;
    double accuracy = 0.0;
    double mean_abs_deviation = 0.0;
    std::size_t na_count = 0;
    std::size_t total = 0;
    std::vector<std::pair<int, std::optional<int>>> records;  // (true, predicted)
};

inline EvalReport accuracy_matrix(const std::vector<std::optional<int>>& preds, const std::vector<int>& truths) {
    if (preds.size() != truths.size())
        throw ArgumentError("accuracy_matrix: " + std::to_string(preds.size()) + " predictions vs " +
                            std::to_string(truths.size()) + " truths");
    EvalReport r;
    r.total = preds.size();
    std::size_t hits = 0, scored = 0;
    double dev = 0;
    std::map<int, std::size_t> hits_by;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int t = truths[i];
        r.records.emplace_back(t, preds[i]);
        ++r.count_by_chi[t];
        ++r.matrix[t][preds[i].value_or(-1)];
        if (!preds[i]) {
            ++r.na_count;
            hits_by[t] += 0;
            continue;
        }
        const bool hit = *preds[i] == t;
        hits += hit;
        hits_by[t] += hit;
        dev += std::abs(*preds[i] - t);
        ++scored;
    }
    r.accuracy = r.total ? static_cast<double>(hits) / static_cast<double>(r.total) : 0.0;
    r.mean_abs_deviation = scored ? dev / static_cast<double>(scored) : 0.0;
    for (const auto& [t, n] : r.count_by_chi) r.accuracy_by_chi[t] = static_cast<double>(hits_by[t]) / static_cast<double>(n);
    return r;
}

/// Long-form matrix: true_chi,predicted,count (predicted "NA" for no answer).
inline void write_matrix_csv(std::ostream& out, const EvalReport& r) {
    out << "true_chi,predicted,count\n";
    for (const auto& [t, row] : r.matrix)
        for (const auto& [p, n] : row) {
            out << t << ',';
            if (p < 0) out << "NA";
            else out << p;
            out << ',' << n << '\n';
        }
}

// ---------------------------------------------------------------------------
// Benchmark-corpus comparison

/// Reference rows of the COLOR02/03/04 comparison: instance, size, chi, and
/// the chromatic numbers reported for the trained model, Tabucol and greedy
/// (0 marks NA).
struct TableOneRow {
    const char* name;
    int size;
    int chi;
    int gnn;
    int tabucol;
    int greedy;
};

inline constexpr TableOneRow kTableOne[] = {
    {"queen5_5", 25, 5, 6, 5, 8},        {"queen6_6", 36, 7, 7, 8, 11},     {"myciel5", 47, 6, 5, 6, 6},
    {"queen7_7", 49, 7, 8, 8, 10},       {"queen8_8", 64, 9, 8, 10, 13},    {"1-Insertions_4", 67, 4, 4, 5, 5},
    {"huck", 74, 11, 8, 11, 11},         {"jean", 80, 10, 7, 10, 10},       {"queen9_9", 81, 10, 9, 11, 16},
    {"david", 87, 11, 9, 11, 12},        {"mug88_1", 88, 4, 3, 4, 4},       {"myciel6", 95, 7, 7, 7, 7},
    {"queen8_12", 96, 12, 10, 12, 15},   {"games120", 120, 9, 6, 9, 9},     {"queen11_11", 121, 11, 12, 0, 17},
    {"anna", 138, 11, 11, 11, 12},       {"2-Insertions_4", 149, 4, 4, 5, 5}, {"queen13_13", 169, 13, 14, 0, 21},
    {"myciel7", 191, 8, 0, 8, 8},        {"homer", 561, 13, 14, 13, 15},
};

inline const TableOneRow* table_one_reference(const std::string& name) {
    for (const auto& r : kTableOne)
        if (name == r.name) return &r;
    return nullptr;
}

struct CorpusRow {
    std::string name;
    int n = 0;
    int chi = 0;                   // annotated
    ChromaticResult exact;         // exact solver within budget
    int protocol_chi = 0;          // exact chi, else best valid colouring found
    bool protocol_proven = false;
    std::optional<int> gnn;
    std::optional<int> tabucol;
    int greedy = 0;
};

struct CorpusReport {
    std::vector<CorpusRow> rows;
    std::vector<std::string> warnings;
    std::size_t gnn_hits = 0, tabucol_hits = 0, greedy_hits = 0;
    double gnn_dev = 0, tabucol_dev = 0, greedy_dev = 0;  // mean |chi_hat - chi| over non-NA
    std::size_t gnn_na = 0, tabucol_na = 0;
};

struct CorpusOptions {
    TabucolParams tabucol{};
    SearchBudget budget{};
    SweepOptions sweep{};
    std::map<std::string, int> annotations;  // overrides / additions to kTableOne
};

// FNV-1a; stable across platforms, unlike std::hash
inline std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
    return h;
}

/// Runs the exact solver, greedy, Tabucol (swept to chi+3) and, when `model`
/// is given, the model sweep on every .col file of `dir` with a known chi.
inline CorpusReport table_one_protocol(const ModelParams* model, const std::filesystem::path& dir,
                                       const CorpusOptions& opt = {}) {
    CorpusReport rep;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".col") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    double gd = 0, td = 0, yd = 0;
    std::size_t gn = 0, tn = 0;
    for (const auto& f : files) {
        const std::string name = f.stem().string();
        int chi = 0;
        if (auto it = opt.annotations.find(name); it != opt.annotations.end()) chi = it->second;
        else if (const auto* ref = table_one_reference(name)) chi = ref->chi;
        if (chi == 0) {
            rep.warnings.push_back(name + ": no chromatic-number annotation, skipped");
            continue;
        }
        Graph g;
        try {
            std::ifstream in(f);
            g = parse_dimacs(in);
        } catch (const std::exception& e) {
            rep.warnings.push_back(name + ": " + e.what() + ", skipped");
            continue;
        }
        CorpusRow row;
        row.name = name;
        row.n = g.order();
        row.chi = chi;
        row.exact = chromatic_number(g, opt.budget);
        row.greedy = greedy_colouring(g).colours_used;
        TabucolParams tp = opt.tabucol;
        tp.seed = derive_seed(opt.tabucol.seed, {name_hash(name)});
        row.tabucol = tabucol_chromatic(g, chi + kSweepMargin, tp);
        if (model) row.gnn = predict_chromatic(*model, g, chi, opt.sweep);

        row.protocol_proven = row.exact.exact;
        row.protocol_chi = row.exact.exact ? row.exact.chi : std::min(row.exact.upper, row.greedy);
        if (!row.exact.exact && row.tabucol) row.protocol_chi = std::min(row.protocol_chi, *row.tabucol);

        rep.greedy_hits += row.greedy == chi;
        yd += std::abs(row.greedy - chi);
        if (row.tabucol) {
            rep.tabucol_hits += *row.tabucol == chi;
            td += std::abs(*row.tabucol - chi);
            ++tn;
        } else {
            ++rep.tabucol_na;
        }
        if (model) {
            if (row.gnn) {
                rep.gnn_hits += *row.gnn == chi;
                gd += std::abs(*row.gnn - chi);
                ++gn;
            } else {
                ++rep.gnn_na;
            }
        }
        rep.rows.push_back(std::move(row));
    }
    rep.greedy_dev = rep.rows.empty() ? 0 : yd / static_cast<double>(rep.rows.size());
    rep.tabucol_dev = tn ? td / static_cast<double>(tn) : 0;
    rep.gnn_dev = gn ? gd / static_cast<double>(gn) : 0;
    return rep;
}

inline void write_corpus_csv(std::ostream& out, const CorpusReport& r) {
    auto opt = [](const std::optional<int>& x) { return x ? std::to_string(*x) : std::string("NA"); };
    out << "instance,n,chi,exact_lower,exact_upper,exact_closed,protocol_chi,gnn,tabucol,greedy,"
           "ref_gnn,ref_tabucol,ref_greedy\n";
    for (const auto& row : r.rows) {
        const auto* ref = table_one_reference(row.name);
        auto ref_cell = [](int x) { return x ? std::to_string(x) : std::string("NA"); };
        out << row.name << ',' << row.n << ',' << row.chi << ',' << row.exact.lower << ',' << row.exact.upper << ','
            << (row.exact.exact ? 1 : 0) << ',' << row.protocol_chi << ',' << opt(row.gnn) << ',' << opt(row.tabucol)
            << ',' << row.greedy << ',' << (ref ? ref_cell(ref->gnn) : "") << ',' << (ref ? ref_cell(ref->tabucol) : "")
            << ',' << (ref ? ref_cell(ref->greedy) : "") << '\n';
    }
}

// ---------------------------------------------------------------------------
// Embedding decode study

struct DecodeRecord {
    std::size_t instance = 0;
    int chi = 0;
    double confidence = 0.0;  // model prediction at C = chi
    ClusterReport report;
    Matrix embeddings;
};

struct DecodeStudy {
    std::vector<DecodeRecord> records;  // only instances predicted positive
    std::size_t fed = 0;
    double spearman_confidence_conflict = 0.0;  // NaN with fewer than 3 records
};

/// Feeds every instance at C = chi, keeps predictions >= 0.5 and clusters
/// their final vertex embeddings into chi groups.
inline DecodeStudy decode_study(const ModelParams& p, const std::vector<GcpInstance>& instances, int t_max,
                                std::uint64_t seed, std::size_t batch_size = 16) {
    DecodeStudy st;
    for (std::size_t i = 0; i < instances.size(); i += batch_size) {
        const std::size_t end = std::min(instances.size(), i + batch_size);
        std::vector<Graph> gs;
        std::vector<int> cs;
        for (std::size_t j = i; j < end; ++j) {
            gs.push_back(instances[j].graph);
            cs.push_back(std::max(2, instances[j].chi));
        }
        const Batch b = build_batch(gs, cs);
        const auto r = forward(p, b, t_max, derive_seed(seed, {i}));
        st.fed += gs.size();
        for (std::size_t j = 0; j < gs.size(); ++j) {
            if (r.prediction[j] < 0.5) continue;
            const auto& seg = b.segments.segments[j];
            DecodeRecord rec;
            rec.instance = i + j;
            rec.chi = cs[j];
            rec.confidence = r.prediction[j];
            rec.embeddings = r.vertex_embeddings.middleRows(seg.vertex_begin, seg.vertex_count());
            rec.report = decode_colouring(gs[j], rec.embeddings, cs[j], derive_seed(seed, {i + j, 7})).report;
            st.records.push_back(std::move(rec));
        }
    }
    std::vector<double> conf, conflict;
    for (const auto& r : st.records) {
        conf.push_back(r.confidence);
        conflict.push_back(r.report.mean_conflict);
    }
    st.spearman_confidence_conflict =
        conf.size() >= 3 ? spearman(conf, conflict) : std::numeric_limits<double>::quiet_NaN();
    return st;
}

inline void write_decode_csv(std::ostream& out, const DecodeStudy& st) {
    out << "instance,chi,confidence,mean_conflict,silhouette,valid\n";
    for (const auto& r : st.records)
        out << r.instance << ',' << r.chi << ',' << r.confidence << ',' << r.report.mean_conflict << ','
            << (r.report.silhouette ? std::to_string(*r.report.silhouette) : std::string("NA")) << ','
            << (r.report.valid_colouring ? 1 : 0) << '\n';
}

}  // namespace gcpnn
