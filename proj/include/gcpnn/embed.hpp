#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gcpnn/error.hpp"
#include "gcpnn/exact.hpp"
#include "gcpnn/graph.hpp"
#include "gcpnn/rng.hpp"
#include "gcpnn/tensor.hpp"

namespace gcpnn {

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
};

struct KMeansResult {
    std::vector<int> assignment;
    Matrix centroids;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // after each Lloyd iteration of the winning restart
};

namespace detail {

inline double sqdist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

inline KMeansResult lloyd(const Matrix& x, int k, Rng& rng, int max_iterations) {
    const Eigen::Index n = x.rows();
    KMeansResult r;
    r.centroids.resize(k, x.cols());
    // k-means++ seeding
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    r.centroids.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    for (int c = 1; c < k; ++c) {
        double total = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sqdist(x, i, r.centroids, c - 1));
            total += d2[i];
        }
        Eigen::Index pick = 0;
        if (total > 0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick < n - 1; ++pick) {
                u -= d2[pick];
                if (u < 0) break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        r.centroids.row(c) = x.row(pick);
    }

    r.assignment.assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        double inertia = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = sqdist(x, i, r.centroids, 0);
            for (int c = 1; c < k; ++c) {
                const double dd = sqdist(x, i, r.centroids, c);
                if (dd < bd) bd = dd, best = c;
            }
            changed |= r.assignment[i] != best;
            r.assignment[i] = best;
            inertia += bd;
        }
        // empty clusters take the point farthest from its centroid
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (int a : r.assignment) ++count[a];
        for (int c = 0; c < k; ++c) {
            if (count[c] > 0) continue;
            Eigen::Index far = -1;
            double fd = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (count[r.assignment[i]] < 2) continue;
                const double dd = sqdist(x, i, r.centroids, r.assignment[i]);
                if (dd > fd) fd = dd, far = i;
            }
            if (far < 0) break;
            --count[r.assignment[far]];
            r.assignment[far] = c;
            count[c] = 1;
            r.centroids.row(c) = x.row(far);
            inertia -= fd;
            changed = true;
        }
        r.inertia_trace.push_back(inertia);
        r.inertia = inertia;
        if (!changed && it > 0) break;
        // centroid update
        Matrix sum = Matrix::Zero(k, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) sum.row(r.assignment[i]) += x.row(i);
        for (int c = 0; c < k; ++c)
            if (count[c] > 0) r.centroids.row(c) = sum.row(c) / count[c];
    }
    // inertia against the final centroids
    r.inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) r.inertia += sqdist(x, i, r.centroids, r.assignment[i]);
    return r;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds, best inertia over restarts.
inline KMeansResult kmeans(const Matrix& embeddings, int k, std::uint64_t seed, const KMeansOptions& opt = {}) {
    if (k < 1) throw ArgumentError("kmeans needs k >= 1");
    if (k > embeddings.rows())
        throw ArgumentError("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(embeddings.rows()) + " points");
    KMeansResult best;
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
        auto res = detail::lloyd(embeddings, k, rng, opt.max_iterations);
        if (r == 0 || res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

struct ConflictScores {
    std::vector<double> per_cluster;
    double mean = 0.0;
};

/// Per cluster S: edges inside S over |S| choose 2 (0 when |S| < 2); mean over k clusters.
inline ConflictScores conflict_ratio(const Graph& g, const std::vector<int>& assignment, int k) {
    if (static_cast<int>(assignment.size()) != g.order())
        throw ArgumentError("conflict_ratio: assignment covers " + std::to_string(assignment.size()) + " of " +
                            std::to_string(g.order()) + " vertices");
    if (k < 1) throw ArgumentError("conflict_ratio needs k >= 1");
    std::vector<double> inside(static_cast<std::size_t>(k), 0.0), size(static_cast<std::size_t>(k), 0.0);
    for (int a : assignment) {
        if (a < 0 || a >= k) throw ArgumentError("cluster index " + std::to_string(a) + " outside [0, k)");
        ++size[a];
    }
    for (auto [u, v] : g.edges())
        if (assignment[u] == assignment[v]) ++inside[assignment[u]];
    ConflictScores s;
    for (int c = 0; c < k; ++c) {
        const double pairs = size[c] * (size[c] - 1) / 2;
        s.per_cluster.push_back(pairs > 0 ? inside[c] / pairs : 0.0);
    }
    s.mean = std::accumulate(s.per_cluster.begin(), s.per_cluster.end(), 0.0) / k;
    return s;
}

/// Mean silhouette with Euclidean distance; singleton clusters score 0 and a
/// point with a = b = 0 scores 0.
inline double silhouette(const Matrix& x, const std::vector<int>& assignment) {
    if (static_cast<Eigen::Index>(assignment.size()) != x.rows())
        throw ArgumentError("silhouette: assignment size does not match point count");
    std::vector<int> labels(assignment);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.size() < 2) throw ArgumentError("silhouette is undefined for a single cluster");
    const int nl = static_cast<int>(labels.size());
    std::vector<int> idx(assignment.size()), size(static_cast<std::size_t>(nl), 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        idx[i] = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), assignment[i]) - labels.begin());
        ++size[idx[i]];
    }
    const Eigen::Index n = x.rows();
    double total = 0;
    std::vector<double> sum(static_cast<std::size_t>(nl));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) sum[idx[j]] += (x.row(i) - x.row(j)).norm();
        const int own = idx[i];
        if (size[own] < 2) continue;
        const double a = sum[own] / (size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < nl; ++c)
            if (c != own) b = std::min(b, sum[c] / size[c]);
        const double m = std::max(a, b);
        total += m > 0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

/// Average ranks (1-based), ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
        i = j + 1;
    }
    return rank;
}

/// Spearman's rank correlation (Pearson on average ranks). NaN when either
/// input is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ArgumentError("spearman: lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    if (x.size() < 3) throw ArgumentError("spearman needs at least 3 points");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

struct Pca2d {
    Matrix points;                  // n x 2
    double explained[2] = {0, 0};   // variance along each component
    bool degenerate = false;        // input had zero variance; points are all zero
};

/// Projection of the mean-centred rows onto the two leading principal axes.
/// Each axis is signed so its largest-magnitude entry is positive.
inline Pca2d pca2d(const Matrix& x) {
    if (x.rows() < 2) throw ArgumentError("pca2d needs at least two points");
    Pca2d out;
    const Matrix centred = x.rowwise() - x.colwise().mean();
    const Matrix cov = centred.transpose() * centred / static_cast<double>(x.rows() - 1);
    if (cov.trace() <= 0) {
        out.points = Matrix::Zero(x.rows(), 2);
        out.degenerate = true;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);  // ascending eigenvalues
    const auto dim = cov.rows();
    Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(dim, 2);
    for (int c = 0; c < 2 && c < dim; ++c) {
        Eigen::VectorXd v = es.eigenvectors().col(dim - 1 - c);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        axes.col(c) = v;
        out.explained[c] = std::max(0.0, es.eigenvalues()(dim - 1 - c));
    }
    out.points = centred * axes;
    return out;
}

struct ClusterReport {
    std::vector<int> assignment;
    std::vector<double> per_cluster_conflict;
    double mean_conflict = 0.0;
    std::optional<double> silhouette;  // absent with fewer than two clusters
    bool valid_colouring = false;
};

struct DecodeResult {
    Colouring colouring;
    ClusterReport report;
};

/// Clusters vertex embeddings into C groups and reads the clusters as colours.
inline DecodeResult decode_colouring(const Graph& g, const Matrix& embeddings, int colours, std::uint64_t seed,
                                     const KMeansOptions& opt = {}) {
    if (embeddings.rows() != g.order())
        throw ArgumentError("decode_colouring: " + std::to_string(embeddings.rows()) + " embeddings for " +
                            std::to_string(g.order()) + " vertices");
    if (colours < 1) throw ArgumentError("decode_colouring needs C >= 1");
    const int k = std::min<int>(colours, g.order());
    const auto km = kmeans(embeddings, k, seed, opt);
    DecodeResult r;
    r.report.assignment = km.assignment;
    const auto scores = conflict_ratio(g, km.assignment, colours);
    r.report.per_cluster_conflict = scores.per_cluster;
    r.report.mean_conflict = scores.mean;
    if (k >= 2) {
        std::vector<int> labels(km.assignment);
        std::sort(labels.begin(), labels.end());
        if (labels.front() != labels.back()) r.report.silhouette = silhouette(embeddings, km.assignment);
    }
    r.colouring = Colouring::from_assignment(km.assignment);
    r.report.valid_colouring = r.report.mean_conflict == 0.0;
    return r;
}

}  // namespace gcpnn
