#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "gcpnn/error.hpp"
#include "gcpnn/forge.hpp"
#include "gcpnn/layers.hpp"
#include "gcpnn/model.hpp"
#include "gcpnn/rng.hpp"

namespace gcpnn {

struct TrainConfig {
    int epochs = 5300;
    int batches_per_epoch = 0;  // 0: one pass over the dataset
    int instances_per_batch = 16;
    int d = 64;
    int hidden = 64;
    int t_max = 32;
    AdamHyper adam{};
    double clip_norm = 0.65;  // global gradient norm cap; <= 0 disables
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // epochs; 0 disables
    std::string checkpoint_path;
    double target_accuracy = 0.82;
    double target_loss = 0.35;
    int window = 128;  // batches in the running stop-rule average
    ForwardOptions forward{};

    /// Full-sized run: 64-wide embeddings, 32 rounds, 16 instances per batch.
    static TrainConfig full_preset() { return {}; }

    /// Desk-sized proxy used in CI: d=32, 16 rounds, 500 epochs.
    static TrainConfig desk_preset() {
        TrainConfig c;
        c.epochs = 500;
        c.d = 32;
        c.t_max = 16;
        c.adam.lr = 1e-3;
        return c;
    }
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> log;
    bool reached_target = false;
};

inline void write_train_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
    out << "epoch,loss,acc\n";
    for (const auto& e : log) out << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
}

/// Mean loss and accuracy over one batch; also the BCE tensor for backward.
struct StepOutcome {
    Tensor loss;
    double accuracy = 0.0;
};

inline StepOutcome batch_loss(const ModelParams& p, const Batch& b, int t_max, std::uint64_t colour_seed,
                              const ForwardOptions& opt = {}) {
    if (!b.labels) throw ArgumentError("batch_loss needs labelled instances");
    const auto r = forward(p, b, t_max, colour_seed, opt);
    std::vector<double> y(b.labels->begin(), b.labels->end());
    StepOutcome s;
    s.loss = bce_loss(r.instance_logits, y);
    int hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += (r.prediction[i] >= 0.5) == (y[i] > 0.5);
    s.accuracy = static_cast<double>(hits) / static_cast<double>(y.size());
    return s;
}

/// Adam over disjoint-union batches. Pairs are shuffled every epoch and always
/// travel together, so every batch is balanced. Training stops at the epoch cap
/// or once the running means over the last `window` batches reach both
/// target_accuracy and target_loss.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg,
                         const std::function<void(const EpochLog&, const ModelParams&)>& on_epoch = {}) {
    if (cfg.instances_per_batch < 2 || cfg.instances_per_batch % 2)
        throw ArgumentError("instances_per_batch must be even and >= 2");
    if (data.instances.empty() || data.instances.size() % 2) throw ArgumentError("train needs a non-empty paired dataset");
    const std::size_t pairs = data.instances.size() / 2;
    const std::size_t pairs_per_batch = static_cast<std::size_t>(cfg.instances_per_batch / 2);
    const std::size_t full_batches = std::max<std::size_t>(1, pairs / pairs_per_batch);
    const std::size_t batches =
        cfg.batches_per_epoch > 0 ? static_cast<std::size_t>(cfg.batches_per_epoch) : full_batches;

    TrainResult res;
    res.params = init_model(cfg.d, derive_seed(cfg.seed, {1}), cfg.hidden);
    auto params = res.params.tensors();
    AdamState adam;
    Rng order_rng(derive_seed(cfg.seed, {2}));
    std::vector<std::size_t> order(pairs);
    std::iota(order.begin(), order.end(), 0);
    std::deque<std::pair<double, double>> recent;  // (loss, acc)
    double recent_loss = 0, recent_acc = 0;
    std::size_t cursor = pairs;
    std::uint64_t step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double loss_sum = 0, acc_sum = 0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            std::vector<GcpInstance> members;
            for (std::size_t k = 0; k < pairs_per_batch; ++k) {
                if (cursor >= pairs) {
                    order_rng.shuffle(order.begin(), order.end());
                    cursor = 0;
                }
                const std::size_t pi = order[cursor++];
                members.push_back(data.instances[2 * pi]);
                members.push_back(data.instances[2 * pi + 1]);
            }
            const Batch b = build_batch(members);
            const auto s = batch_loss(res.params, b, cfg.t_max, derive_seed(cfg.seed, {3, step++}), cfg.forward);
            const double loss = s.loss.item();
            if (!std::isfinite(loss)) throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
            auto grads = backward(s.loss, params);
            clip_by_global_norm(grads, cfg.clip_norm);
            adam_step(params, grads, adam, cfg.adam);

            loss_sum += loss;
            acc_sum += s.accuracy;
            recent.emplace_back(loss, s.accuracy);
            recent_loss += loss;
            recent_acc += s.accuracy;
            if (static_cast<int>(recent.size()) > cfg.window) {
                recent_loss -= recent.front().first;
                recent_acc -= recent.front().second;
                recent.pop_front();
            }
        }
        EpochLog e;
        e.epoch = epoch;
        e.loss = loss_sum / static_cast<double>(batches);
        e.accuracy = acc_sum / static_cast<double>(batches);
        e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back(e);
        if (on_epoch) on_epoch(e, res.params);
        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() && epoch % cfg.checkpoint_every == 0)
            save_checkpoint(res.params, {cfg.d, cfg.hidden, cfg.t_max, cfg.seed, epoch}, cfg.checkpoint_path);
        const double n = static_cast<double>(recent.size());
        if (static_cast<int>(recent.size()) >= std::min<int>(cfg.window, static_cast<int>(batches)) &&
            recent_acc / n >= cfg.target_accuracy && recent_loss / n <= cfg.target_loss) {
            res.reached_target = true;
            break;
        }
    }
    return res;
}

/// Accuracy of thresholded predictions over a labelled instance list,
/// evaluated in batches with one colour seed per batch.
inline double evaluate_accuracy(const ModelParams& p, const std::vector<GcpInstance>& xs, int t_max,
                                std::uint64_t seed, std::size_t batch_size = 16) {
    if (xs.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < xs.size(); i += batch_size) {
        std::vector<GcpInstance> chunk(xs.begin() + static_cast<std::ptrdiff_t>(i),
                                       xs.begin() + static_cast<std::ptrdiff_t>(std::min(xs.size(), i + batch_size)));
        const auto r = forward(p, build_batch(chunk), t_max, derive_seed(seed, {i}));
        for (std::size_t j = 0; j < chunk.size(); ++j) hits += (r.prediction[j] >= 0.5) == chunk[j].label;
    }
    return static_cast<double>(hits) / static_cast<double>(xs.size());
}

}  // namespace gcpnn
