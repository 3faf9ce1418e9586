// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   gcpnn_acceptance [--skip-training] [--epochs N] [--data DIR] [--save-model PATH]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "gcpnn/gcpnn.hpp"
#include "oracles.hpp"

using namespace gcpnn;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS " : "FAIL ") << id << ": " << detail << std::endl;
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double x, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

void oracle_equivalence() {
    const auto t0 = Clock::now();
    int agree = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng rng(derive_seed(0xACCE, {s}));
        const int n = static_cast<int>(rng.between(1, 8));
        const Graph g = random_density_graph(n, rng.uniform(0.1, 0.9), derive_seed(0xACCE, {s, 1}));
        const auto r = chromatic_number(g);
        agree += r.exact && r.chi == brute_force_chromatic(g) && validate_colouring(g, r.witness, r.chi);
    }
    const double t = seconds_since(t0);
    report("exact-oracle", agree == 200 && t < 60,
           std::to_string(agree) + "/200 agree with brute force in " + fixed(t) + " s");
}

void known_chi_corpus(const std::string& data_dir) {
    CorpusOptions opt;
    opt.budget = {5'000'000, std::chrono::milliseconds(20000)};
    const auto rep = table_one_protocol(nullptr, data_dir + "/color", opt);
    bool ok = !rep.rows.empty();
    std::string detail;
    std::size_t closed = 0;
    for (const auto& r : rep.rows) {
        if (r.exact.exact) {
            ++closed;
            if (r.exact.chi != r.chi) ok = false, detail += " " + r.name + " solved " + std::to_string(r.exact.chi);
        }
    }
    for (const char* must : {"queen5_5", "queen6_6", "myciel5", "myciel6"}) {
        const CorpusRow* row = nullptr;
        for (const auto& r : rep.rows)
            if (r.name == must) row = &r;
        if (!row) {
            ok = false;
            detail += std::string(" ") + must + " missing";
            continue;
        }
        ok = ok && row->protocol_chi == row->chi;
        detail += " " + row->name + "->" + std::to_string(row->protocol_chi) +
                  (row->protocol_proven ? "" : "(bound [" + std::to_string(row->exact.lower) + "," +
                                                   std::to_string(row->exact.upper) + "], heuristic)");
    }
    report("known-chi-corpus", ok,
           std::to_string(closed) + "/" + std::to_string(rep.rows.size()) + " closed exactly, all match;" + detail);
}

void generator_invariants() {
    const auto t0 = Clock::now();
    const Dataset d = build_dataset(64, {40, 60}, {3, 8}, 2024);
    const auto audit = audit_dataset(d);
    const double t = seconds_since(t0);
    report("generator-audit", audit.ok() && d.instances.size() == 128 && t < 1800,
           std::to_string(audit.instances_checked) + " instances audited, " + std::to_string(audit.violations.size()) +
               " violations, " + std::to_string(audit.unresolved) + " unresolved, " + fixed(t) + " s");
}

std::vector<Graph> heuristic_corpus() {
    std::vector<Graph> out;
    for (std::uint64_t s = 0; out.size() < 500; ++s) {
        switch (s % 6) {
            case 0: out.push_back(random_density_graph(3 + s % 6, 0.2 + 0.1 * (s % 7), s)); break;
            case 1: out.push_back(random_density_graph(20 + s % 30, 0.1 + 0.05 * (s % 9), s)); break;
            case 2: out.push_back(powerlaw_tree(5 + s % 40, 2.5, s)); break;
            case 3: out.push_back(watts_strogatz(10 + s % 30, 4, 0.2, s)); break;
            case 4: out.push_back(holme_kim(10 + s % 30, 3, 0.3, s)); break;
            default: {
                const Graph fixed[] = {petersen_graph(), queen_graph(5, 5), myciel(4), cycle_graph(7),
                                       complete_graph(6), queen_graph(4, 6)};
                out.push_back(fixed[(s / 6) % 6]);
            }
        }
    }
    return out;
}

void heuristic_validity() {
    const auto graphs = heuristic_corpus();
    std::size_t violations = 0, tabu_runs = 0, oracle_checks = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const Graph& g = graphs[i];
        const auto greedy = greedy_colouring(g);
        if (!validate_colouring(g, greedy, greedy.colours_used)) ++violations;
        TabucolParams tp;
        tp.seed = i;
        tp.max_iterations = 5000;
        Colouring witness;
        const auto tabu = tabucol_chromatic(g, std::max(2, greedy.colours_used), tp, &witness);
        if (tabu) {
            ++tabu_runs;
            if (!validate_colouring(g, witness, *tabu)) ++violations;
        }
        if (g.order() <= 8) {
            ++oracle_checks;
            const int chi = brute_force_chromatic(g);
            if (greedy.colours_used < chi || (tabu && *tabu < chi)) ++violations;
        }
    }
    report("heuristic-validity", violations == 0,
           std::to_string(graphs.size()) + " graphs, " + std::to_string(tabu_runs) + " successful Tabucol sweeps, " +
               std::to_string(oracle_checks) + " checked against brute force, " + std::to_string(violations) +
               " violations");
}

void tabucol_strength() {
    const auto t0 = Clock::now();
    const Graph q = queen_graph(5, 5), m = myciel(5);
    int q_ok = 0, m_ok = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        TabucolParams tp;
        tp.seed = derive_seed(0x7AB0, {s});
        const auto rq = tabucol(q, 5, tp);
        q_ok += rq.success && validate_colouring(q, rq.colouring, 5);
        const auto rm = tabucol(m, 6, tp);
        m_ok += rm.success && validate_colouring(m, rm.colouring, 6);
    }
    const double t = seconds_since(t0);
    report("tabucol-strength", q_ok >= 95 && m_ok >= 95 && t < 300,
           "queen5_5 k=5 " + std::to_string(q_ok) + "/100, myciel5 k=6 " + std::to_string(m_ok) + "/100, " +
               fixed(t) + " s");
}

void sat_reduction() {
    std::size_t cases = 0, agree = 0;
    for (int n = 1; n <= 6; ++n)
        for (const Graph& g : oracle::connected_graphs(n))
            for (int k = 1; k <= 3; ++k) {
                ++cases;
                const bool sat = oracle::brute_force_sat(gcp_to_sat(g, k));
                agree += sat == is_k_colourable(g, k).colourable();
            }
    report("sat-reduction", agree == cases,
           std::to_string(agree) + "/" + std::to_string(cases) + " (graph, k) cases equi-satisfiable");
}

void gradient_correctness() {
    double worst = 0;
    for (std::uint64_t s = 0; s < 3; ++s) {
        const ModelParams p = init_model(4, derive_seed(0x6EAD, {s}));
        const Graph g = random_density_graph(5, 0.5, s);
        const Batch b = build_batch({g}, {3});
        const Matrix col = sample_colour_embeddings(b, 4, s);
        const double y = static_cast<double>(s % 2);
        worst = std::max(worst, oracle::gradient_check(p.tensors(), [&] {
            return bce_loss(forward(p, b, 2, col).instance_logits, {y});
        }));
    }
    report("gradient-check", worst < 1e-4, "max relative error " + std::to_string(worst) + " (d=4, n=5, t_max=2)");
}

void model_symmetries() {
    double worst = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(derive_seed(0x5E11, {s}));
        const ModelParams p = init_model(8, s, 16);
        const int n = static_cast<int>(rng.between(4, 14));
        const int c = static_cast<int>(rng.between(2, 5));
        const Graph g = random_density_graph(n, rng.uniform(0.2, 0.7), s);
        const Matrix col = sample_colour_embeddings(build_batch({g}, {c}), p.d, s);
        const double base = forward(p, build_batch({g}, {c}), 4, col).prediction[0];

        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm.begin(), perm.end());
        Graph h(n);
        for (auto [u, v] : g.edges()) h.add_edge(perm[u], perm[v]);
        worst = std::max(worst, std::abs(forward(p, build_batch({h}, {c}), 4, col).prediction[0] - base));

        std::vector<int> slots(static_cast<std::size_t>(c));
        std::iota(slots.begin(), slots.end(), 0);
        rng.shuffle(slots.begin(), slots.end());
        Matrix shuffled(col.rows(), col.cols());
        for (int i = 0; i < c; ++i) shuffled.row(i) = col.row(slots[i]);
        worst = std::max(worst, std::abs(forward(p, build_batch({g}, {c}), 4, shuffled).prediction[0] - base));

        const Graph other = random_density_graph(n + 3, 0.4, s + 1000);
        const Matrix co = sample_colour_embeddings(build_batch({other}, {c + 1}), p.d, s + 1000);
        Matrix both(col.rows() + co.rows(), p.d);
        both << co, col;
        const auto r = forward(p, build_batch({other, g}, {c + 1, c}), 4, both);
        worst = std::max(worst, std::abs(r.prediction[1] - base));
        worst = std::max(worst,
                         std::abs(r.prediction[0] - forward(p, build_batch({other}, {c + 1}), 4, co).prediction[0]));
    }
    report("model-symmetries", worst <= 1e-9, "max deviation " + std::to_string(worst) + " over 50 cases");
}

void decoder_constructed(Rng& rng, std::size_t& cases, std::size_t& agree) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Graph g = random_density_graph(10 + s % 10, 0.3, s);
        const auto chi = chromatic_number(g);
        std::vector<int> a = chi.witness.assignment;
        if (s % 2 && g.size()) a[g.edges()[s % g.size()].first] = a[g.edges()[s % g.size()].second];
        Matrix x(g.order(), chi.chi + 1);
        for (int v = 0; v < g.order(); ++v)
            for (int j = 0; j <= chi.chi; ++j) x(v, j) = (j == a[v] ? 8.0 : 0.0) + rng.uniform(-0.2, 0.2);
        const auto d = decode_colouring(g, x, chi.chi, s);
        ++cases;
        agree += d.report.valid_colouring == validate_colouring(g, d.colouring, chi.chi) &&
                 (d.report.mean_conflict == 0.0) == d.report.valid_colouring;
    }
}

struct Trained {
    ModelParams params;
    double best_epoch_acc = 0;
    double final_epoch_acc = 0;
    int best_epoch = 0;
    int epochs = 0;
    double seconds = 0;
};

Trained desk_training(int epochs) {
    const auto t0 = Clock::now();
    const Dataset d = build_dataset(512, {10, 20}, {3, 8}, 0xDE5C);
    TrainConfig cfg = TrainConfig::desk_preset();
    cfg.epochs = epochs;
    cfg.seed = 0xDE5C;
    Trained out;
    auto r = train(d, cfg, [&](const EpochLog& e, const ModelParams&) {
        if (e.accuracy > out.best_epoch_acc) out.best_epoch_acc = e.accuracy, out.best_epoch = e.epoch;
        if (e.epoch % 25 == 0)
            std::cerr << "  epoch " << e.epoch << " loss " << fixed(e.loss, 4) << " acc " << fixed(e.accuracy, 4)
                      << std::endl;
    });
    out.params = std::move(r.params);
    out.final_epoch_acc = r.log.back().accuracy;
    out.epochs = static_cast<int>(r.log.size());
    out.seconds = seconds_since(t0);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    bool skip_training = false;
    int epochs = 500;
    std::string data_dir = GCPNN_DATA_DIR;
    std::string save_model;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--skip-training")) skip_training = true;
        else if (!std::strcmp(argv[i], "--epochs") && i + 1 < argc) epochs = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--data") && i + 1 < argc) data_dir = argv[++i];
        else if (!std::strcmp(argv[i], "--save-model") && i + 1 < argc) save_model = argv[++i];
        else {
            std::cerr << "unknown argument " << argv[i] << '\n';
            return 2;
        }
    }

    auto guarded = [](const char* id, const std::function<void()>& f) {
        try {
            f();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    };
    guarded("exact-oracle", oracle_equivalence);
    guarded("known-chi-corpus", [&] { known_chi_corpus(data_dir); });
    guarded("generator-audit", generator_invariants);
    guarded("heuristic-validity", heuristic_validity);
    guarded("tabucol-strength", tabucol_strength);
    guarded("sat-reduction", sat_reduction);
    guarded("gradient-check", gradient_correctness);
    guarded("model-symmetries", model_symmetries);

    Rng rng(0xDEC0);
    std::size_t dec_cases = 0, dec_agree = 0;
    decoder_constructed(rng, dec_cases, dec_agree);

    if (skip_training) {
        std::cout << "SKIP desk-training, acceptance-curve, decoder-contract (--skip-training)\n";
        return failures ? 1 : 0;
    }

    try {
        const Trained t = desk_training(epochs);
        if (!save_model.empty()) save_checkpoint(t.params, {32, t.params.hidden, 16, 0xDE5C, t.epochs}, save_model);
        report("desk-training", t.best_epoch_acc >= 0.65 && t.seconds < 7200,
               "best epoch accuracy " + fixed(t.best_epoch_acc) + " (epoch " + std::to_string(t.best_epoch) + "), final " +
                   fixed(t.final_epoch_acc) + " after " + std::to_string(t.epochs) + " epochs, " + fixed(t.seconds, 0) +
                   " s");

        const Dataset held_out = build_dataset(256, {10, 20}, {3, 8}, 0x7E57);
        const auto curve = acceptance_curve(t.params, held_out.instances, 16, 0x7E57);
        bool monotone = true;
        std::string values;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            if (i && curve[i].mean_prediction < curve[i - 1].mean_prediction) monotone = false;
            values += (i ? ", " : "") + fixed(curve[i].mean_prediction);
        }
        const bool ends = curve.front().mean_prediction < 0.5 && curve.back().mean_prediction > 0.5;
        report("acceptance-curve", monotone && ends, "mean prediction at chi-2..chi+2: " + values);

        const auto study = decode_study(t.params, held_out.instances, 16, 0xDEC0);
        for (std::size_t i = 0; i < study.records.size() && i < 100; ++i) {
            const auto& r = study.records[i];
            const Graph& g = held_out.instances[r.instance].graph;
            ++dec_cases;
            dec_agree += r.report.valid_colouring ==
                         validate_colouring(g, Colouring::from_assignment(r.report.assignment), r.chi);
        }
        const double rho = study.spearman_confidence_conflict;
        const std::size_t model_cases = dec_cases - 100;
        report("decoder-contract",
               dec_agree == dec_cases && model_cases >= 100 && std::isfinite(rho) && rho < 0,
               std::to_string(dec_agree) + "/" + std::to_string(dec_cases) + " validity flags agree (" +
                   std::to_string(model_cases) + " model-produced); Spearman(confidence, conflict) = " + fixed(rho) +
                   " over " + std::to_string(study.records.size()) + " positive predictions");
    } catch (const std::exception& e) {
        report("desk-training", false, std::string("exception: ") + e.what());
    }
    return failures ? 1 : 0;
}
