#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gcpnn/gcpnn.hpp"
#include "oracles.hpp"

using namespace gcpnn;

namespace {
Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
    return m;
}
}  // namespace

TEST(Tensor, ForwardValues) {
    Rng rng(1);
    const Matrix a = random_matrix(3, 4, rng);
    EXPECT_EQ(matmul(Tensor::constant(Matrix::Identity(3, 3)), Tensor::constant(a)).value(), a);
    const Tensor r = relu(Tensor::constant((Matrix(1, 2) << -2.0, 3.5).finished()));
    EXPECT_EQ(r.value()(0, 0), 0.0);
    EXPECT_EQ(r.value()(0, 1), 3.5);

    SegmentMap seg;
    seg.segments = {{0, 2, 0, 2}, {2, 5, 2, 4}};
    const Tensor x = Tensor::constant((Matrix(5, 1) << 1, 3, 2, 4, 9).finished());
    const Tensor m = segment_mean(x, seg);
    EXPECT_DOUBLE_EQ(m.value()(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(m.value()(1, 0), 5.0);
}

TEST(Tensor, ShapeErrorsNameBothShapes) {
    try {
        matmul(Tensor::constant(Matrix::Zero(2, 3)), Tensor::constant(Matrix::Zero(2, 3)));
        FAIL();
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    }
    EXPECT_THROW(add(Tensor::constant(Matrix::Zero(2, 3)), Tensor::constant(Matrix::Zero(3, 2))), ShapeError);
}

TEST(Tensor, LayerNormMoments) {
    Rng rng(2);
    const Tensor x = Tensor::constant(random_matrix(6, 9, rng) * 5.0);
    const Tensor y = layer_norm(x, Tensor::constant(Matrix::Ones(1, 9)), Tensor::constant(Matrix::Zero(1, 9)), 0.0);
    for (Eigen::Index r = 0; r < 6; ++r) {
        const auto row = y.value().row(r);
        EXPECT_NEAR(row.mean(), 0.0, 1e-9);
        EXPECT_NEAR((row.array() - row.mean()).square().mean(), 1.0, 1e-9);
    }
}

TEST(Tensor, BackwardBasics) {
    Rng rng(3);
    const Tensor w = Tensor::parameter(random_matrix(3, 2, rng), "w");
    const Matrix xv = random_matrix(4, 3, rng);
    const auto g = backward(sum_all(matmul(Tensor::constant(xv), w)), {w});
    // d/dW sum(XW) = X^T 1
    EXPECT_TRUE(g[0].isApprox(xv.transpose() * Matrix::Ones(4, 2), 1e-12));

    const Tensor unused = Tensor::parameter(Matrix::Ones(2, 2), "u");
    const auto g2 = backward(Tensor::scalar(3.0), {w, unused});
    EXPECT_TRUE(g2[0].isZero());
    EXPECT_TRUE(g2[1].isZero());
    EXPECT_THROW(backward(matmul(Tensor::constant(xv), w), {w}), ArgumentError);
}

TEST(Tensor, OpGradientsMatchFiniteDifferences) {
    Rng rng(4);
    const Tensor a = Tensor::parameter(random_matrix(4, 6, rng), "a");
    const Tensor b = Tensor::parameter(random_matrix(6, 6, rng), "b");
    const Tensor gain = Tensor::parameter(random_matrix(1, 6, rng), "gain");
    const Tensor off = Tensor::parameter(random_matrix(1, 6, rng), "off");
    const Tensor bias = Tensor::parameter(random_matrix(1, 3, rng), "bias");
    auto loss = [&] {
        Tensor h = layer_norm(matmul(a, b), gain, off);
        h = add(mul(sigmoid(h), tanh(h)), scale(h, 0.3));
        Tensor s = concat_cols(slice_cols(h, 0, 2), slice_cols(h, 4, 1));
        s = add_bias(s, bias);
        Tensor r = concat_rows(s, broadcast_rows(bias, 2));
        Tensor col = matmul(r, Tensor::constant(Matrix::Ones(3, 1)));
        Tensor m = segment_mean(slice_cols(concat_rows(col, col), 0, 1), SegmentMap{{{0, 3, 0, 1}, {3, 12, 1, 2}}});
        return add(bce_with_logits(m, {1.0, 0.0}), mean_all(mul(s, s)));
    };
    EXPECT_LT(oracle::gradient_check({a, b, gain, off, bias}, loss), 1e-6);
}

TEST(Tensor, BceStableAndLn2) {
    const Tensor z = Tensor::constant(Matrix::Zero(3, 1));
    EXPECT_NEAR(bce_loss(z, {1, 0, 1}).item(), std::log(2.0), 1e-12);
    for (double l : {-50.0, -10.0, 0.0, 10.0, 50.0}) {
        const Tensor t = Tensor::constant(Matrix::Constant(1, 1, l));
        EXPECT_TRUE(std::isfinite(bce_loss(t, {1}).item()));
        EXPECT_TRUE(std::isfinite(bce_loss(t, {0}).item()));
    }
    EXPECT_LT(bce_loss(Tensor::constant(Matrix::Constant(1, 1, 40.0)), {1}).item(), 1e-15);
}

TEST(Layers, MlpZeroAndIdentity) {
    Rng rng(5);
    Mlp m = Mlp::create({2, 2, 2, 2}, rng, "m");
    for (auto& w : m.weights) w.mutable_value().setZero();
    for (auto& b : m.biases) b.mutable_value().setZero();
    const Tensor x = Tensor::constant((Matrix(2, 2) << 0.3, 0.7, 1.5, 2.0).finished());
    EXPECT_TRUE(mlp_forward(m, x).value().isZero());
    for (auto& w : m.weights) w.mutable_value().setIdentity();
    EXPECT_EQ(mlp_forward(m, x).value(), x.value());
    EXPECT_THROW(mlp_forward(m, Tensor::constant(Matrix::Zero(1, 3))), ShapeError);
}

TEST(Layers, LstmPinnedValues) {
    Rng rng(6);
    LayerNormLstm l = LayerNormLstm::create(3, 4, rng, "l");
    l.weight.mutable_value().setZero();
    for (auto& g : l.ln_gain) g.mutable_value().setZero();
    const LstmState zero{Tensor::constant(Matrix::Zero(2, 4)), Tensor::constant(Matrix::Zero(2, 4))};
    const Tensor in = Tensor::constant(Matrix::Zero(2, 3));
    const auto s = lstm_step(l, zero, in);
    EXPECT_TRUE(s.h.value().isZero());
    EXPECT_TRUE(s.cell.value().isZero());

    // offsets reach the gates unchanged: i=f=o=sigmoid(0), candidate tanh(1)
    l.ln_offset[LayerNormLstm::kCandidate].mutable_value().setOnes();
    const auto t = lstm_step(l, zero, in);
    EXPECT_NEAR(t.cell.value()(0, 0), 0.5 * std::tanh(1.0), 1e-15);
    EXPECT_NEAR(t.h.value()(1, 3), 0.25 * std::tanh(1.0), 1e-15);
    EXPECT_EQ(lstm_step(l, zero, in).h.value(), t.h.value());
    EXPECT_THROW(lstm_step(l, zero, Tensor::constant(Matrix::Zero(2, 5))), ShapeError);
}

TEST(Layers, LstmAndMlpGradients) {
    Rng rng(7);
    LayerNormLstm l = LayerNormLstm::create(3, 4, rng, "l");
    Mlp m = Mlp::create({4, 6, 6, 1}, rng, "m");
    const Tensor x = Tensor::constant(random_matrix(5, 3, rng));
    const LstmState s0{Tensor::constant(random_matrix(5, 4, rng)), Tensor::constant(random_matrix(5, 4, rng))};
    std::vector<Tensor> params;
    l.collect(params);
    m.collect(params);
    auto loss = [&] {
        auto s = lstm_step(l, s0, x);
        s = lstm_step(l, s, x);
        return bce_loss(m(s.h), {1, 0, 1, 1, 0});
    };
    EXPECT_LT(oracle::gradient_check(params, loss), 1e-4);
}

TEST(Adam, FirstStepAndLimits) {
    std::vector<Tensor> p{Tensor::parameter((Matrix(1, 3) << 1.0, -2.0, 0.5).finished(), "p")};
    const Matrix g = (Matrix(1, 3) << 0.3, -4.0, 0.0).finished();
    AdamHyper h;
    h.lr = 0.01;
    AdamState st;
    const Matrix before = p[0].value();
    adam_step(p, {g}, st, h);
    EXPECT_EQ(st.step, 1);
    for (int j = 0; j < 3; ++j)
        EXPECT_NEAR(p[0].value()(0, j) - before(0, j), -h.lr * g(0, j) / (std::abs(g(0, j)) + h.eps), 1e-15);

    AdamState z;
    const Matrix keep = p[0].value();
    adam_step(p, {Matrix::Zero(1, 3)}, z, h);
    EXPECT_EQ(p[0].value(), keep);

    AdamState c;
    Matrix prev = p[0].value();
    for (int i = 0; i < 500; ++i) {
        prev = p[0].value();
        adam_step(p, {(Matrix(1, 3) << 2.0, -0.1, 1e-3).finished()}, c, h);
    }
    const Matrix step = p[0].value() - prev;
    EXPECT_NEAR(step(0, 0), -h.lr, 1e-6);
    EXPECT_NEAR(step(0, 1), h.lr, 1e-6);

    Matrix bad = Matrix::Zero(1, 3);
    bad(0, 1) = std::nan("");
    try {
        adam_step(p, {bad}, c, h);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("p"), std::string::npos);
    }
}

TEST(Model, InitShapesAndDeterminism) {
    const ModelParams p = init_model(64, 3);
    EXPECT_EQ(p.v_init.cols(), 64);
    EXPECT_EQ(p.v_update.in_width(), 128);
    EXPECT_EQ(p.c_update.in_width(), 64);
    EXPECT_EQ(p.v_vote.weights.back().cols(), 1);
    const ModelParams q = init_model(64, 3);
    const auto a = p.tensors(), b = q.tensors();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].value(), b[i].value());
    EXPECT_THROW(init_model(0, 1), ArgumentError);
}

TEST(Model, BatchOperators) {
    const Batch one = build_batch({complete_graph(3)}, {3});
    EXPECT_EQ(Matrix(*one.m_vc), Matrix::Ones(3, 3));
    EXPECT_EQ(Matrix(*one.m_vv), Matrix::Ones(3, 3) - Matrix::Identity(3, 3));
    const Batch two = build_batch({complete_graph(3), path_graph(2)}, {3, 2});
    const Matrix vc = Matrix(*two.m_vc);
    EXPECT_TRUE(vc.block(0, 3, 3, 2).isZero());
    EXPECT_TRUE(vc.block(3, 0, 2, 3).isZero());
    EXPECT_TRUE(Matrix(*two.m_vv).block(0, 3, 3, 2).isZero());
    EXPECT_THROW(build_batch({complete_graph(3)}, {1}), ArgumentError);
    EXPECT_THROW(build_batch(std::vector<Graph>{}, {}), ArgumentError);
}

TEST(Model, PredictionRange) {
    const ModelParams p = init_model(8, 1, 16);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const double y = predict(p, random_density_graph(10, 0.4, s), 3, 4, s);
        EXPECT_GT(y, 0.0);
        EXPECT_LT(y, 1.0);
    }
    EXPECT_THROW(predict(p, complete_graph(3), 3, 0, 1), ArgumentError);
}

namespace {
Graph permuted(const Graph& g, const std::vector<int>& perm) {
    Graph h(g.order());
    for (auto [u, v] : g.edges()) h.add_edge(perm[u], perm[v]);
    return h;
}
}  // namespace

TEST(Model, Symmetries) {
    const ModelParams p = init_model(6, 9, 12);
    for (std::uint64_t s = 0; s < 10; ++s) {
        Rng rng(s);
        const Graph g = random_density_graph(9, 0.4, s);
        const int c = 3;
        const Matrix col = sample_colour_embeddings(build_batch({g}, {c}), p.d, s);
        const double base = forward(p, build_batch({g}, {c}), 5, col).prediction[0];

        std::vector<int> perm(9);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm.begin(), perm.end());
        EXPECT_NEAR(forward(p, build_batch({permuted(g, perm)}, {c}), 5, col).prediction[0], base, 1e-9);

        Matrix swapped = col;
        swapped.row(0).swap(swapped.row(2));
        EXPECT_NEAR(forward(p, build_batch({g}, {c}), 5, swapped).prediction[0], base, 1e-9);

        const Graph h = random_density_graph(7, 0.5, s + 100);
        const Matrix ch = sample_colour_embeddings(build_batch({h}, {4}), p.d, s + 100);
        Matrix both(col.rows() + ch.rows(), p.d);
        both << col, ch;
        const auto r = forward(p, build_batch({g, h}, {c, 4}), 5, both);
        EXPECT_NEAR(r.prediction[0], base, 1e-9);
        EXPECT_NEAR(r.prediction[1], forward(p, build_batch({h}, {4}), 5, ch).prediction[0], 1e-9);
    }
}

TEST(Model, EndToEndGradient) {
    const ModelParams p = init_model(4, 11);
    const Batch b = build_batch({random_density_graph(5, 0.5, 3), cycle_graph(5)}, {3, 2});
    Batch lb = b;
    lb.labels = std::vector<bool>{true, false};
    const Matrix col = sample_colour_embeddings(b, 4, 1);
    auto loss = [&] { return bce_loss(forward(p, b, 2, col).instance_logits, {1.0, 0.0}); };
    EXPECT_LT(oracle::gradient_check(p.tensors(), loss), 1e-4);
}

TEST(Model, CheckpointRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "gcpnn_test.ckpt";
    const ModelParams p = init_model(4, 5, 8);
    save_checkpoint(p, {4, 8, 7, 5, 3}, path.string());
    CheckpointMeta meta;
    const ModelParams q = load_checkpoint(path.string(), 4, &meta);
    EXPECT_EQ(meta.t_max, 7);
    EXPECT_EQ(meta.epoch, 3);
    const auto a = p.tensors(), b = q.tensors();
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(std::memcmp(a[i].value().data(), b[i].value().data(), sizeof(double) * a[i].value().size()), 0);
    EXPECT_EQ(predict(p, petersen_graph(), 3, 3, 1), predict(q, petersen_graph(), 3, 3, 1));
    EXPECT_THROW(load_checkpoint(path.string(), 8), CheckpointError);

    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);
    std::filesystem::remove(path);
    EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);
}

TEST(Train, FixedBatchOverfits) {
    const Dataset d = build_dataset(4, {8, 10}, {3, 4}, 21);
    Batch b = build_batch(d.instances);
    ModelParams p = init_model(8, 2, 16);
    auto params = p.tensors();
    AdamState st;
    AdamHyper h;
    h.lr = 3e-3;
    const double first = batch_loss(p, b, 4, 0).loss.item();
    double last = first;
    for (int i = 0; i < 200; ++i) {
        const auto s = batch_loss(p, b, 4, 0);
        last = s.loss.item();
        auto g = backward(s.loss, params);
        adam_step(params, g, st, h);
    }
    EXPECT_LT(last, first);
}

TEST(Train, LogAndValidation) {
    const Dataset d = build_dataset(8, {8, 10}, {3, 4}, 22);
    TrainConfig cfg = TrainConfig::desk_preset();
    cfg.epochs = 3;
    cfg.d = 4;
    cfg.hidden = 8;
    cfg.t_max = 2;
    cfg.instances_per_batch = 4;
    const auto r = train(d, cfg);
    ASSERT_EQ(r.log.size(), 3u);
    for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r.log[i].epoch, static_cast<int>(i) + 1);
    std::ostringstream csv;
    write_train_log_csv(csv, r.log);
    EXPECT_EQ(csv.str().rfind("epoch,loss,acc\n", 0), 0u);
    cfg.instances_per_batch = 3;
    EXPECT_THROW(train(d, cfg), ArgumentError);
}
