#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcpnn/error.hpp"
#include "gcpnn/forge.hpp"
#include "gcpnn/graph.hpp"
#include "gcpnn/layers.hpp"
#include "gcpnn/rng.hpp"
#include "gcpnn/tensor.hpp"

namespace gcpnn {

/// Trainable parameters of the vertex/colour message-passing model.
struct ModelParams {
    int d = 0;
    int hidden = 64;     // width of the MLP hidden layers
    Tensor v_init;       // 1 x d, shared by every vertex
    Mlp c_msg;           // colour -> vertex messages, d -> d
    Mlp v_msg;           // vertex -> colour messages, d -> d
    LayerNormLstm v_update;  // input 2d (neighbour sum | colour messages)
    LayerNormLstm c_update;  // input d
    Mlp v_vote;          // d -> 1

    /// Every trainable tensor, in checkpoint order.
    std::vector<Tensor> tensors() const {
        std::vector<Tensor> out{v_init};
        c_msg.collect(out);
        v_msg.collect(out);
        v_update.collect(out);
        c_update.collect(out);
        v_vote.collect(out);
        return out;
    }

    /// Deep copy; the copy shares no tape nodes with *this.
    ModelParams clone() const;
};

/// Weights are Glorot-uniform, biases and LSTM layer-norm offsets zero,
/// layer-norm gains one; v_init is U(0, 1) like the colour seeds.
inline ModelParams init_model(int d, std::uint64_t seed, int hidden = 64) {
    if (d < 1) throw ArgumentError("embedding width must be >= 1");
    if (hidden < 1) throw ArgumentError("hidden width must be >= 1");
    Rng rng(seed);
    ModelParams p;
    p.d = d;
    p.hidden = hidden;
    Matrix v0(1, d);
    for (Eigen::Index i = 0; i < d; ++i) v0(0, i) = rng.uniform();
    p.v_init = Tensor::parameter(std::move(v0), "v_init");
    p.c_msg = Mlp::create({d, hidden, hidden, d}, rng, "c_msg");
    p.v_msg = Mlp::create({d, hidden, hidden, d}, rng, "v_msg");
    p.v_update = LayerNormLstm::create(2 * d, d, rng, "v_update");
    p.c_update = LayerNormLstm::create(d, d, rng, "c_update");
    p.v_vote = Mlp::create({d, hidden, hidden, 1}, rng, "v_vote");
    return p;
}

inline ModelParams ModelParams::clone() const {
    ModelParams c = init_model(d, 0, hidden);
    auto src = tensors();
    auto dst = c.tensors();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i].mutable_value() = src[i].value();
    return c;
}

/// Disjoint union of instances with the two adjacency operators: m_vv is the
/// union's vertex adjacency; m_vc joins each vertex to every colour slot of
/// its own instance and to nothing else.
struct Batch {
    Graph union_graph;
    std::shared_ptr<const SparseMatrix> m_vv;
    std::shared_ptr<const SparseMatrix> m_vc;
    std::shared_ptr<const SparseMatrix> m_cv;  // transpose of m_vc
    SegmentMap segments;
    std::vector<int> targets;
    std::optional<std::vector<bool>> labels;

    std::size_t size() const noexcept { return segments.count(); }
};

inline Batch build_batch(const std::vector<Graph>& graphs, const std::vector<int>& colours) {
    if (graphs.empty()) throw ArgumentError("build_batch needs at least one instance");
    for (int c : colours)
        if (c < 2) throw ArgumentError("target colour count must be >= 2, got " + std::to_string(c));
    auto [u, seg] = disjoint_union(graphs, colours);
    Batch b;
    const int nv = seg.total_vertices(), nc = seg.total_colours();

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * u.size());
    for (auto [a, c] : u.edges()) {
        t.emplace_back(a, c, 1.0);
        t.emplace_back(c, a, 1.0);
    }
    auto vv = std::make_shared<SparseMatrix>(nv, nv);
    vv->setFromTriplets(t.begin(), t.end());

    t.clear();
    for (const auto& s : seg.segments)
        for (int v = s.vertex_begin; v < s.vertex_end; ++v)
            for (int c = s.colour_begin; c < s.colour_end; ++c) t.emplace_back(v, c, 1.0);
    auto vc = std::make_shared<SparseMatrix>(nv, nc);
    vc->setFromTriplets(t.begin(), t.end());
    auto cv = std::make_shared<SparseMatrix>(vc->transpose());

    b.union_graph = std::move(u);
    b.m_vv = std::move(vv);
    b.m_vc = std::move(vc);
    b.m_cv = std::move(cv);
    b.segments = std::move(seg);
    b.targets = colours;
    return b;
}

inline Batch build_batch(const std::vector<GcpInstance>& instances) {
    std::vector<Graph> gs;
    std::vector<int> cs;
    std::vector<bool> labels;
    for (const auto& x : instances) {
        gs.push_back(x.graph);
        cs.push_back(x.target_c);
        labels.push_back(x.label);
    }
    Batch b = build_batch(gs, cs);
    b.labels = std::move(labels);
    return b;
}

/// Initial colour embeddings: every slot of member i draws its d values from
/// U(0, 1) with a generator seeded by derive_seed(seed, {i}), so a member's
/// colours do not depend on what else is in the batch.
inline Matrix sample_colour_embeddings(const Batch& b, int d, std::uint64_t seed) {
    Matrix c(b.segments.total_colours(), d);
    for (std::size_t i = 0; i < b.segments.count(); ++i) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        const auto& s = b.segments.segments[i];
        for (int slot = s.colour_begin; slot < s.colour_end; ++slot)
            for (int j = 0; j < d; ++j) c(slot, j) = rng.uniform();
    }
    return c;
}

enum class VertexInit { shared, gaussian };

struct ForwardOptions {
    VertexInit vertex_init = VertexInit::shared;
    bool degree_normalise = false;  // divide neighbour sums by degree
    std::uint64_t vertex_seed = 0;  // only for VertexInit::gaussian
};

struct ForwardResult {
    Tensor instance_logits;    // one row per member: mean of its vertex logits
    std::vector<double> prediction;
    Matrix vertex_embeddings;  // final V
    Matrix vertex_logits;
};

namespace detail {
inline void check_finite(const Tensor& t, const char* what, int round) {
    if (!t.value().allFinite())
        throw NumericError(std::string("non-finite ") + what + " in message-passing round " + std::to_string(round));
}

inline std::shared_ptr<const SparseMatrix> row_normalised(const SparseMatrix& m) {
    auto out = std::make_shared<SparseMatrix>(m);
    for (Eigen::Index r = 0; r < out->outerSize(); ++r) {
        double deg = 0;
        for (SparseMatrix::InnerIterator it(*out, r); it; ++it) deg += it.value();
        if (deg > 0)
            for (SparseMatrix::InnerIterator it(*out, r); it; ++it) it.valueRef() /= deg;
    }
    return out;
}
}  // namespace detail

/// Runs t_max rounds of
///   V, V_h <- V_u(V_h, [M_vv V | M_vc C_msg(C)])
///   C, C_h <- C_u(C_h, M_vc^T V_msg(V))
/// from V = v_init on every vertex and the given colour embeddings, then
/// votes: prediction = sigmoid(mean over the member's vertices of V_vote(V)).
inline ForwardResult forward(const ModelParams& p, const Batch& b, int t_max, const Matrix& colour_init,
                             const ForwardOptions& opt = {}) {
    if (t_max < 1) throw ArgumentError("t_max must be >= 1");
    const Eigen::Index nv = b.segments.total_vertices(), nc = b.segments.total_colours();
    if (colour_init.rows() != nc || colour_init.cols() != p.d)
        throw ShapeError("colour embeddings " + shape_str(colour_init) + " for " + std::to_string(nc) +
                         " slots of width " + std::to_string(p.d));

    Tensor V;
    if (opt.vertex_init == VertexInit::shared) {
        V = broadcast_rows(p.v_init, nv);
    } else {
        Rng rng(opt.vertex_seed);
        Matrix v0(nv, p.d);
        for (Eigen::Index i = 0; i < v0.size(); ++i) v0.data()[i] = rng.normal();
        V = Tensor::constant(std::move(v0));
    }
    Tensor C = Tensor::constant(colour_init);
    LstmState vs{Tensor::constant(Matrix::Zero(nv, p.d)), Tensor::constant(Matrix::Zero(nv, p.d))};
    LstmState cs{Tensor::constant(Matrix::Zero(nc, p.d)), Tensor::constant(Matrix::Zero(nc, p.d))};

    auto m_vv = opt.degree_normalise ? detail::row_normalised(*b.m_vv) : b.m_vv;
    auto m_vc = opt.degree_normalise ? detail::row_normalised(*b.m_vc) : b.m_vc;
    auto m_cv = opt.degree_normalise ? detail::row_normalised(*b.m_cv) : b.m_cv;

    for (int t = 1; t <= t_max; ++t) {
        const Tensor from_neighbours = spmm(m_vv, V);
        const Tensor from_colours = spmm(m_vc, p.c_msg(C));
        const Tensor to_colours = spmm(m_cv, p.v_msg(V));
        vs = p.v_update.step(vs, concat_cols(from_neighbours, from_colours));
        cs = p.c_update.step(cs, to_colours);
        V = vs.h;
        C = cs.h;
        detail::check_finite(V, "vertex embedding", t);
        detail::check_finite(C, "colour embedding", t);
    }
    ForwardResult r;
    const Tensor logits = p.v_vote(V);
    r.instance_logits = segment_mean(logits, b.segments);
    detail::check_finite(r.instance_logits, "logit", t_max);
    for (Eigen::Index i = 0; i < r.instance_logits.rows(); ++i)
        r.prediction.push_back(sigmoid(r.instance_logits.value()(i, 0)));
    r.vertex_embeddings = V.value();
    r.vertex_logits = logits.value();
    return r;
}

inline ForwardResult forward(const ModelParams& p, const Batch& b, int t_max, std::uint64_t colour_seed,
                             const ForwardOptions& opt = {}) {
    return forward(p, b, t_max, sample_colour_embeddings(b, p.d, colour_seed), opt);
}

/// Probability that g admits a c-colouring; >= 0.5 is a positive answer.
inline double predict(const ModelParams& p, const Graph& g, int c, int t_max, std::uint64_t colour_seed) {
    return forward(p, build_batch({g}, {c}), t_max, colour_seed).prediction.front();
}

// ---------------------------------------------------------------------------
// Checkpoints: "GCPNNCKPT1\n", one JSON header line, then every tensor as
// rows*cols little-endian float64 values in header order.

struct CheckpointMeta {
    int d = 0;
    int hidden = 64;
    int t_max = 32;
    std::uint64_t seed = 0;
    int epoch = 0;
};

inline constexpr char kCheckpointMagic[] = "GCPNNCKPT1";

inline void save_checkpoint(const ModelParams& p, const CheckpointMeta& meta, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path);
    nlohmann::json h;
    h["d"] = p.d;
    h["hidden"] = p.hidden;
    h["t_max"] = meta.t_max;
    h["seed"] = meta.seed;
    h["epoch"] = meta.epoch;
    h["tensors"] = nlohmann::json::array();
    const auto ts = p.tensors();
    for (const auto& t : ts) h["tensors"].push_back({{"name", t.name()}, {"shape", {t.rows(), t.cols()}}});
    out << kCheckpointMagic << '\n' << h.dump() << '\n';
    for (const auto& t : ts) {
        for (Eigen::Index i = 0; i < t.value().size(); ++i) {
            auto bits = std::bit_cast<std::uint64_t>(t.value().data()[i]);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
    if (!out) throw CheckpointError("write failed for " + path);
}

/// Loads a checkpoint; expected_d, when given, must match the stored width.
inline ModelParams load_checkpoint(const std::string& path, std::optional<int> expected_d = std::nullopt,
                                   CheckpointMeta* meta_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read " + path);
    std::string magic, header;
    std::getline(in, magic);
    if (magic != kCheckpointMagic) throw CheckpointError(path + " is not a gcpnn checkpoint");
    std::getline(in, header);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header);
    } catch (const std::exception& e) {
        throw CheckpointError("bad checkpoint header: " + std::string(e.what()));
    }
    CheckpointMeta meta;
    meta.d = h.at("d").get<int>();
    meta.hidden = h.value("hidden", 64);
    meta.t_max = h.value("t_max", 32);
    meta.seed = h.value("seed", std::uint64_t{0});
    meta.epoch = h.value("epoch", 0);
    if (expected_d && *expected_d != meta.d)
        throw CheckpointError("checkpoint has d=" + std::to_string(meta.d) + ", expected d=" +
                              std::to_string(*expected_d));
    ModelParams p = init_model(meta.d, 0, meta.hidden);
    auto ts = p.tensors();
    const auto& listed = h.at("tensors");
    if (listed.size() != ts.size())
        throw CheckpointError("checkpoint lists " + std::to_string(listed.size()) + " tensors, model has " +
                              std::to_string(ts.size()));
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto& e = listed[i];
        if (e.at("name").get<std::string>() != ts[i].name() || e.at("shape").at(0).get<Eigen::Index>() != ts[i].rows() ||
            e.at("shape").at(1).get<Eigen::Index>() != ts[i].cols())
            throw CheckpointError("checkpoint tensor " + std::to_string(i) + " (" + e.dump() + ") does not match " +
                                  ts[i].name() + " " + shape_str(ts[i]));
        Matrix& m = ts[i].mutable_value();
        for (Eigen::Index j = 0; j < m.size(); ++j) {
            std::uint64_t bits;
            if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits))
                throw CheckpointError("checkpoint truncated in " + ts[i].name());
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            m.data()[j] = std::bit_cast<double>(bits);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after last tensor");
    if (meta_out) *meta_out = meta;
    return p;
}

}  // namespace gcpnn
