// gcpnn command-line entry point.
//
// Exit codes: 0 success (NA-only results included), 1 domain error, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcpnn/gcpnn.hpp"

using namespace gcpnn;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Graph read_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return parse_dimacs(in);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// <out>.manifest.json: subcommand, resolved options and library version.
void write_manifest(const CLI::App& sub, const std::string& out_path) {
    if (out_path.empty()) return;
    nlohmann::json m;
    m["tool"] = "gcpnn";
    m["version"] = kVersion;
    m["subcommand"] = sub.get_name();
    nlohmann::json opts = nlohmann::json::object();
    for (const CLI::Option* o : sub.get_options()) {
        if (o->get_name() == "--help" || o->get_name() == "-h") continue;
        std::string name = o->get_name(false, true);
        if (name.empty()) name = o->get_name();
        if (o->count() > 0) {
            const auto& res = o->results();
            opts[name] = res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
        } else {
            opts[name] = o->get_default_str();
        }
    }
    m["options"] = std::move(opts);
    std::ofstream f(out_path + ".manifest.json");
    f << m.dump(2) << '\n';
}

SearchBudget budget_from(std::uint64_t nodes, double seconds) {
    return {nodes, std::chrono::milliseconds(static_cast<long long>(seconds * 1000))};
}

std::string opt_str(const std::optional<int>& x) { return x ? std::to_string(*x) : "NA"; }

ModelParams load_model(const std::string& path, int& t_max) {
    CheckpointMeta meta;
    auto p = load_checkpoint(path, std::nullopt, &meta);
    if (t_max <= 0) t_max = meta.t_max;
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph colouring toolkit: instance forge, exact and heuristic solvers, GNN training and analysis"};
    app.set_config("--config", "", "TOML/INI file with default flag values");
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "root seed")->capture_default_str();

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "forge a balanced dataset of adversarial pairs");
    int pairs = 8, n_min = 40, n_max = 60, chi_min = 3, chi_max = 8;
    unsigned jobs = 1;
    std::string out;
    bool audit = false;
    double time_limit = 60;
    std::uint64_t max_nodes = 10'000'000;
    gen->add_option("--pairs", pairs, "number of (positive, negative) pairs")->capture_default_str();
    gen->add_option("--n-min", n_min)->capture_default_str();
    gen->add_option("--n-max", n_max)->capture_default_str();
    gen->add_option("--chi-min", chi_min)->capture_default_str();
    gen->add_option("--chi-max", chi_max)->capture_default_str();
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    gen->add_option("--out", out, "output JSONL")->required();
    gen->add_flag("--audit", audit, "re-check every label with the exact solver");
    gen->add_option("--max-nodes", max_nodes)->capture_default_str();
    gen->add_option("--time-limit", time_limit, "seconds per solver call")->capture_default_str();

    // calibrate --------------------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "sweep G(n,p) densities for a target chromatic number");
    int cal_n = 50, cal_chi = 5, samples = 15;
    cal->add_option("--n", cal_n)->capture_default_str();
    cal->add_option("--chi", cal_chi)->capture_default_str();
    cal->add_option("--samples", samples)->capture_default_str();
    cal->add_option("--seed", seed)->capture_default_str();

    // solve ------------------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "exact k-colourability or chromatic number of a DIMACS graph");
    std::string graph_path;
    int k = 0;
    bool chromatic = false;
    solve->add_option("graph", graph_path, "DIMACS .col file")->required()->check(CLI::ExistingFile);
    auto* kopt = solve->add_option("--k", k, "decide k-colourability");
    auto* copt = solve->add_flag("--chromatic", chromatic, "compute the chromatic number");
    kopt->excludes(copt);
    solve->add_option("--max-nodes", max_nodes)->capture_default_str();
    solve->add_option("--time-limit", time_limit, "seconds")->capture_default_str();
    solve->add_option("--out", out, "write the witness colouring (one colour per line)");

    // baseline ---------------------------------------------------------------
    auto* base = app.add_subcommand("baseline", "greedy or Tabucol colouring");
    std::string method = "greedy", order = "degree";
    int upper = 0;
    TabucolParams tparams;
    base->add_option("graph", graph_path)->required()->check(CLI::ExistingFile);
    base->add_option("--method", method)->check(CLI::IsMember({"greedy", "tabucol"}))->capture_default_str();
    base->add_option("--order", order, "greedy vertex order")->check(CLI::IsMember({"degree", "natural"}))->capture_default_str();
    base->add_option("--k", k, "tabucol: colour count to try (default: sweep 2..--upper)");
    base->add_option("--upper", upper, "tabucol sweep bound (default: greedy colour count)");
    base->add_option("--iterations", tparams.max_iterations)->capture_default_str();
    base->add_option("--tenure-base", tparams.tenure_base)->capture_default_str();
    base->add_option("--tenure-slope", tparams.tenure_slope)->capture_default_str();
    base->add_option("--seed", seed)->capture_default_str();
    base->add_option("--out", out, "write the colouring (one colour per line)");

    // reduce-sat -------------------------------------------------------------
    auto* rsat = app.add_subcommand("reduce-sat", "encode k-colourability as DIMACS CNF");
    rsat->add_option("graph", graph_path)->required()->check(CLI::ExistingFile);
    rsat->add_option("--k", k)->required();
    rsat->add_option("--out", out, "CNF output (default: stdout)");

    // train ------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "train the GNN on a JSONL dataset");
    std::string dataset_path, preset = "desk", log_path, ckpt_path;
    TrainConfig tc = TrainConfig::desk_preset();
    std::optional<int> epochs, d_opt, tmax_opt, batch_opt, ckpt_every;
    std::optional<double> lr, target_acc, target_loss, clip;
    tr->add_option("--dataset", dataset_path)->required()->check(CLI::ExistingFile);
    tr->add_option("--out", out, "checkpoint path")->required();
    tr->add_option("--preset", preset)->check(CLI::IsMember({"desk", "full"}))->capture_default_str();
    tr->add_option("--epochs", epochs);
    tr->add_option("--d", d_opt, "embedding width");
    tr->add_option("--t-max", tmax_opt, "message-passing rounds");
    tr->add_option("--batch", batch_opt, "instances per batch (even)");
    tr->add_option("--lr", lr);
    tr->add_option("--clip", clip, "global gradient-norm cap (<= 0 disables)");
    tr->add_option("--target-acc", target_acc);
    tr->add_option("--target-loss", target_loss);
    tr->add_option("--checkpoint-every", ckpt_every, "epochs");
    tr->add_option("--log", log_path, "training log CSV (default: <out>.log.csv)");
    tr->add_option("--seed", seed)->capture_default_str();

    // predict ----------------------------------------------------------------
    auto* pr = app.add_subcommand("predict", "probability that a graph admits a C-colouring");
    int colours = 0, t_max = 0;
    pr->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
    pr->add_option("--colors,--colours", colours)->required();
    pr->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
    pr->add_option("--t-max", t_max, "default: checkpoint value");
    pr->add_option("--seed", seed)->capture_default_str();

    // sweep ------------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "acceptance curve over C = chi-2 .. chi+2");
    std::size_t limit = 0;
    sw->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
    sw->add_option("--dataset", dataset_path)->required()->check(CLI::ExistingFile);
    sw->add_option("--out", out, "curve CSV")->required();
    sw->add_option("--limit", limit, "use only the first N instances (0: all)");
    sw->add_option("--t-max", t_max);
    sw->add_option("--seed", seed)->capture_default_str();

    // eval -------------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "chromatic-number prediction matrix on a dataset");
    bool with_baselines = false;
    int votes = 1;
    ev->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
    ev->add_option("--dataset", dataset_path)->required()->check(CLI::ExistingFile);
    ev->add_option("--out", out, "matrix CSV")->required();
    ev->add_option("--limit", limit);
    ev->add_option("--votes", votes, "colour resamples per C (majority vote)")->capture_default_str();
    ev->add_flag("--with-baselines", with_baselines, "also score Tabucol and greedy");
    ev->add_option("--t-max", t_max);
    ev->add_option("--seed", seed)->capture_default_str();

    // table1 -----------------------------------------------------------------
    auto* t1 = app.add_subcommand("table1", "benchmark-corpus comparison over a directory of .col files");
    std::string dir;
    t1->add_option("--dir", dir)->required()->check(CLI::ExistingDirectory);
    t1->add_option("--checkpoint", ckpt_path, "optional trained model")->check(CLI::ExistingFile);
    t1->add_option("--out", out, "table CSV");
    t1->add_option("--iterations", tparams.max_iterations)->capture_default_str();
    t1->add_option("--max-nodes", max_nodes)->capture_default_str();
    t1->add_option("--time-limit", time_limit)->capture_default_str();
    t1->add_option("--t-max", t_max);
    t1->add_option("--seed", seed)->capture_default_str();

    // decode -----------------------------------------------------------------
    auto* de = app.add_subcommand("decode", "cluster final vertex embeddings into colourings");
    std::string pca_path;
    de->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
    auto* dset = de->add_option("--dataset", dataset_path, "decode every instance at C = chi")->check(CLI::ExistingFile);
    auto* dgraph = de->add_option("--graph", graph_path, "decode one graph")->check(CLI::ExistingFile);
    dset->excludes(dgraph);
    de->add_option("--colors,--colours", colours, "colour count for --graph");
    de->add_option("--out", out, "per-instance conflicts CSV (dataset) or assignment CSV (graph)")->required();
    de->add_option("--pca", pca_path, "PCA-2D CSV of the first decoded instance");
    de->add_option("--limit", limit);
    de->add_option("--t-max", t_max);
    de->add_option("--seed", seed)->capture_default_str();

    // plot -------------------------------------------------------------------
    auto* pl = app.add_subcommand("plot", "render a CSV produced by sweep/eval/decode as SVG");
    std::string kind, csv_path;
    pl->add_option("--kind", kind)->required()->check(CLI::IsMember({"curve", "matrix", "conflicts", "pca"}));
    pl->add_option("--csv", csv_path)->required()->check(CLI::ExistingFile);
    pl->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const auto budget = budget_from(max_nodes, time_limit);

        if (gen->parsed()) {
            ForgeOptions fo;
            fo.budget = budget;
            const auto d = build_dataset(pairs, {n_min, n_max}, {chi_min, chi_max}, seed, fo, jobs,
                                         [](int done, int total) {
                                             if (done % 64 == 0 || done == total)
                                                 std::cerr << "forged " << done << "/" << total << " pairs\n";
                                         });
            if (audit) {
                const auto rep = audit_dataset(d, budget);
                for (const auto& v : rep.violations) std::cerr << "audit: " << v << '\n';
                if (!rep.ok()) throw std::runtime_error("label audit failed");
            }
            auto f = open_out(out);
            save_dataset(d, f);
            write_manifest(*gen, out);
            std::cout << "wrote " << d.instances.size() << " instances to " << out << '\n';
        } else if (cal->parsed()) {
            const double p = calibrate_density(cal_chi, cal_n, samples, seed, 12, budget);
            std::cout << "n=" << cal_n << " chi=" << cal_chi << " p=" << p << '\n';
        } else if (solve->parsed()) {
            const Graph g = read_graph(graph_path);
            std::optional<Colouring> witness;
            if (kopt->count()) {
                const auto o = is_k_colourable(g, k, budget);
                std::cout << to_string(o.status) << '\n';
                witness = o.witness;
                if (o.status == SolveStatus::timeout) return 1;
            } else {
                const auto r = chromatic_number(g, budget);
                if (r.exact) {
                    std::cout << r.chi << '\n';
                } else {
                    std::cout << "timeout: chi in [" << r.lower << ", " << r.upper << "]\n";
                }
                witness = r.witness;
                if (!r.exact) return 1;
            }
            if (!out.empty() && witness) {
                auto f = open_out(out);
                for (int c : witness->assignment) f << c << '\n';
                write_manifest(*solve, out);
            }
        } else if (base->parsed()) {
            const Graph g = read_graph(graph_path);
            Colouring col;
            if (method == "greedy") {
                col = greedy_colouring(g, order == "natural" ? GreedyOrder::natural : GreedyOrder::degree_descending);
                std::cout << col.colours_used << '\n';
            } else {
                tparams.seed = seed;
                if (k > 0) {
                    const auto r = tabucol(g, k, tparams);
                    if (r.success) std::cout << k << '\n';
                    else std::cout << "NA (best conflicts " << r.best_conflicts << ")\n";
                    col = r.colouring;
                } else {
                    const int ub = upper > 0 ? upper : greedy_colouring(g).colours_used;
                    const auto r = tabucol_chromatic(g, std::max(2, ub), tparams, &col);
                    std::cout << opt_str(r) << '\n';
                }
            }
            if (!out.empty() && !col.assignment.empty()) {
                auto f = open_out(out);
                for (int c : col.assignment) f << c << '\n';
                write_manifest(*base, out);
            }
        } else if (rsat->parsed()) {
            const Graph g = read_graph(graph_path);
            const auto cnf = gcp_to_sat(g, k);
            if (out.empty()) {
                write_dimacs_cnf(std::cout, cnf);
            } else {
                auto f = open_out(out);
                write_dimacs_cnf(f, cnf);
                write_manifest(*rsat, out);
            }
        } else if (tr->parsed()) {
            if (preset == "full") tc = TrainConfig::full_preset();
            if (epochs) tc.epochs = *epochs;
            if (d_opt) tc.d = *d_opt;
            if (tmax_opt) tc.t_max = *tmax_opt;
            if (batch_opt) tc.instances_per_batch = *batch_opt;
            if (lr) tc.adam.lr = *lr;
            if (clip) tc.clip_norm = *clip;
            if (target_acc) tc.target_accuracy = *target_acc;
            if (target_loss) tc.target_loss = *target_loss;
            if (ckpt_every) tc.checkpoint_every = *ckpt_every;
            tc.checkpoint_path = out;
            tc.seed = seed;
            const Dataset d = load_dataset(dataset_path);
            const auto r = train(d, tc, [](const EpochLog& e, const ModelParams&) {
                std::cerr << "epoch " << e.epoch << " loss " << e.loss << " acc " << e.accuracy << '\n';
            });
            save_checkpoint(r.params, {tc.d, tc.hidden, tc.t_max, tc.seed, static_cast<int>(r.log.size())}, out);
            auto lf = open_out(log_path.empty() ? out + ".log.csv" : log_path);
            write_train_log_csv(lf, r.log);
            write_manifest(*tr, out);
            std::cout << "trained " << r.log.size() << " epochs"
                      << (r.reached_target ? " (stop targets reached)" : "") << "; final loss " << r.log.back().loss
                      << ", acc " << r.log.back().accuracy << '\n';
        } else if (pr->parsed()) {
            const auto p = load_model(ckpt_path, t_max);
            const double prob = predict(p, read_graph(graph_path), colours, t_max, seed);
            std::cout << prob << (prob >= 0.5 ? " yes\n" : " no\n");
        } else if (sw->parsed()) {
            const auto p = load_model(ckpt_path, t_max);
            auto d = load_dataset(dataset_path);
            if (limit && d.instances.size() > limit) d.instances.resize(limit);
            const auto curve = acceptance_curve(p, d.instances, t_max, seed);
            auto f = open_out(out);
            write_curve_csv(f, curve);
            write_manifest(*sw, out);
            for (const auto& c : curve) std::cout << c.offset << '\t' << c.mean_prediction << '\n';
        } else if (ev->parsed()) {
            const auto p = load_model(ckpt_path, t_max);
            auto d = load_dataset(dataset_path);
            if (limit && d.instances.size() > limit) d.instances.resize(limit);
            std::vector<std::optional<int>> gnn, tabu;
            std::vector<int> greedy_pred, truth;
            for (std::size_t i = 0; i < d.instances.size(); ++i) {
                const auto& x = d.instances[i];
                truth.push_back(x.chi);
                gnn.push_back(predict_chromatic(p, x.graph, x.chi, {t_max, derive_seed(seed, {i}), votes}));
                if (with_baselines) {
                    TabucolParams tp;
                    tp.seed = derive_seed(seed, {i, 1});
                    tabu.push_back(tabucol_chromatic(x.graph, x.chi + kSweepMargin, tp));
                    greedy_pred.push_back(greedy_colouring(x.graph).colours_used);
                }
            }
            const auto rep = accuracy_matrix(gnn, truth);
            auto f = open_out(out);
            write_matrix_csv(f, rep);
            write_manifest(*ev, out);
            std::cout << "gnn: accuracy " << rep.accuracy << ", mean |dev| " << rep.mean_abs_deviation << ", NA "
                      << rep.na_count << '\n';
            if (with_baselines) {
                const auto tr_rep = accuracy_matrix(tabu, truth);
                std::vector<std::optional<int>> g(greedy_pred.begin(), greedy_pred.end());
                const auto gr_rep = accuracy_matrix(g, truth);
                std::cout << "tabucol: accuracy " << tr_rep.accuracy << ", mean |dev| " << tr_rep.mean_abs_deviation
                          << ", NA " << tr_rep.na_count << '\n'
                          << "greedy: accuracy " << gr_rep.accuracy << ", mean |dev| " << gr_rep.mean_abs_deviation
                          << '\n';
            }
        } else if (t1->parsed()) {
            std::optional<ModelParams> p;
            if (!ckpt_path.empty()) p = load_model(ckpt_path, t_max);
            CorpusOptions co;
            co.budget = budget;
            co.tabucol = tparams;
            co.tabucol.seed = seed;
            co.sweep = {t_max > 0 ? t_max : 32, seed, 1};
            const auto rep = table_one_protocol(p ? &*p : nullptr, dir, co);
            for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "instance\tn\tchi\tprotocol\tgnn\ttabucol\tgreedy\n";
            for (const auto& r : rep.rows)
                std::cout << r.name << '\t' << r.n << '\t' << r.chi << '\t' << r.protocol_chi
                          << (r.protocol_proven ? "" : "*") << '\t' << (p ? opt_str(r.gnn) : "-") << '\t'
                          << opt_str(r.tabucol) << '\t' << r.greedy << '\n';
            std::cout << "mean |dev|: gnn " << rep.gnn_dev << " tabucol " << rep.tabucol_dev << " greedy "
                      << rep.greedy_dev << "\n(* = exact solver hit its budget; best valid colouring shown)\n";
            if (!out.empty()) {
                auto f = open_out(out);
                write_corpus_csv(f, rep);
                write_manifest(*t1, out);
            }
        } else if (de->parsed()) {
            const auto p = load_model(ckpt_path, t_max);
            std::vector<GcpInstance> xs;
            if (!dataset_path.empty()) {
                xs = load_dataset(dataset_path).instances;
                if (limit && xs.size() > limit) xs.resize(limit);
            } else if (!graph_path.empty()) {
                if (colours < 2) throw UsageError("decode --graph needs --colors >= 2");
                GcpInstance x;
                x.graph = read_graph(graph_path);
                x.chi = colours;
                x.target_c = colours;
                xs.push_back(std::move(x));
            } else {
                throw UsageError("decode needs --dataset or --graph");
            }
            const auto st = decode_study(p, xs, t_max, seed);
            auto f = open_out(out);
            write_decode_csv(f, st);
            write_manifest(*de, out);
            std::size_t valid = 0;
            for (const auto& r : st.records) valid += r.report.valid_colouring;
            std::cout << st.records.size() << " of " << st.fed << " predicted positive; " << valid
                      << " decoded to valid colourings; Spearman(confidence, conflict) = "
                      << st.spearman_confidence_conflict << '\n';
            if (!pca_path.empty() && !st.records.empty()) {
                const auto& r = st.records.front();
                const auto pc = pca2d(r.embeddings);
                auto pf = open_out(pca_path);
                pf << "vertex,x,y,cluster\n";
                for (Eigen::Index v = 0; v < pc.points.rows(); ++v)
                    pf << v << ',' << pc.points(v, 0) << ',' << pc.points(v, 1) << ',' << r.report.assignment[v]
                       << '\n';
            }
        } else if (pl->parsed()) {
            const auto svg = plot_svg(kind, read_text(csv_path));
            auto f = open_out(out);
            f << svg;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
