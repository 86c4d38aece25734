#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "crgimsc/dataset.hpp"
#include "crgimsc/types.hpp"

namespace crgimsc {

enum class SimilarityKernel { heat_selftuning, cosine };

inline SimilarityKernel kernel_from_string(const std::string& s) {
    if (s == "heat_selftuning") return SimilarityKernel::heat_selftuning;
    if (s == "cosine") return SimilarityKernel::cosine;
    throw std::runtime_error("unknown similarity kernel: " + s);
}

inline std::string to_string(SimilarityKernel k) {
    return k == SimilarityKernel::heat_selftuning ? "heat_selftuning" : "cosine";
}

struct GraphConfig {
    SimilarityKernel kernel = SimilarityKernel::heat_selftuning;
    int neighbors = 5;
};

// p-nearest-neighbor similarity over the columns of a view. An edge is kept
// when either endpoint lists the other among its p nearest; weights are the
// self-tuning heat kernel exp(-d_ij^2 / (sigma_i sigma_j)) with sigma_i the
// distance to the ceil(p/2)-th neighbor, or max(0, cosine). The result is
// symmetrized as (S + S^T)/2 with a zero diagonal.
inline Matrix build_similarity(const ViewMatrix& view, int neighbors, SimilarityKernel kernel) {
    const Index n = view.sample_count();
    if (neighbors < 1 || neighbors >= n)
        throw std::runtime_error("neighbors must lie in [1, n^v): got " + std::to_string(neighbors) +
                                 " for " + std::to_string(n) + " samples");

    Matrix dist2(n, n);
    for (Index i = 0; i < n; ++i) {
        dist2(i, i) = 0;
        for (Index j = i + 1; j < n; ++j) {
            const Real d2 = (view.data.col(i) - view.data.col(j)).squaredNorm();
            dist2(i, j) = d2;
            dist2(j, i) = d2;
        }
    }

    // per-point neighbor ranking by distance, self excluded
    std::vector<std::vector<Index>> knn(static_cast<std::size_t>(n));
    Vector sigma = Vector::Zero(n);
    const Index half = (neighbors + 1) / 2;
    for (Index i = 0; i < n; ++i) {
        std::vector<Index> order;
        order.reserve(static_cast<std::size_t>(n - 1));
        for (Index j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return dist2(i, a) < dist2(i, b); });
        order.resize(static_cast<std::size_t>(neighbors));
        sigma(i) = std::max(std::sqrt(dist2(i, order[static_cast<std::size_t>(half - 1)])), Real(1e-12));
        knn[static_cast<std::size_t>(i)] = std::move(order);
    }

    Vector norms;
    if (kernel == SimilarityKernel::cosine) {
        norms = view.data.colwise().norm();
        for (Index i = 0; i < n; ++i)
            if (norms(i) == 0)
                throw std::runtime_error("zero-norm sample " + std::to_string(i) + " under cosine kernel");
    }

    Matrix s = Matrix::Zero(n, n);
    const auto weight = [&](Index i, Index j) -> Real {
        if (kernel == SimilarityKernel::heat_selftuning)
            return std::exp(-dist2(i, j) / (sigma(i) * sigma(j)));
        const Real c = view.data.col(i).dot(view.data.col(j)) / (norms(i) * norms(j));
        return std::max(c, Real(0));
    };
    for (Index i = 0; i < n; ++i)
        for (Index j : knn[static_cast<std::size_t>(i)]) {
            if (s(i, j) != 0) continue; // already set via the other endpoint
            const Real w = weight(i, j);
            s(i, j) = w;
            s(j, i) = w;
        }

    s = ((s + s.transpose()) / 2).eval();
    s.diagonal().setZero();
    return s;
}

// D_ii = sum_j (S_ij + S_ji)/2 and L = D^{-1/2} (D - S) D^{-1/2}.
// The degree matrix is returned as its diagonal.
inline std::pair<Vector, Matrix> build_laplacian(const Matrix& s) {
    const Index n = s.rows();
    if (s.cols() != n) throw std::runtime_error("similarity matrix must be square");
    const Vector degree = 0.5 * (s.rowwise().sum() + s.colwise().sum().transpose());
    for (Index i = 0; i < n; ++i)
        if (degree(i) <= 0)
            throw std::runtime_error("isolated vertex " + std::to_string(i) + " (zero degree)");
    const Vector dinv_sqrt = degree.cwiseSqrt().cwiseInverse();
    Matrix l(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const Real dij = i == j ? degree(i) : Real(0);
            l(i, j) = (dij - s(i, j)) * dinv_sqrt(i) * dinv_sqrt(j);
        }
    return {degree, l};
}

// Per-view S^v, diagonal of D^v and normalized Laplacian L^v over the
// existing samples of each view.
struct GraphSet {
    std::vector<Matrix> similarity;
    std::vector<Vector> degree;
    std::vector<Matrix> laplacian;
};

inline GraphSet build_graphs(const MultiViewDataset& dataset, const GraphConfig& config) {
    GraphSet graphs;
    for (Index v = 0; v < dataset.view_count(); ++v) {
        const auto& view = dataset.views[static_cast<std::size_t>(v)];
        const int p = std::min<int>(config.neighbors, static_cast<int>(view.sample_count()) - 1);
        Matrix s = build_similarity(view, p, config.kernel);
        auto [d, l] = build_laplacian(s);
        graphs.similarity.push_back(std::move(s));
        graphs.degree.push_back(std::move(d));
        graphs.laplacian.push_back(std::move(l));
    }
    return graphs;
}

} // namespace crgimsc
