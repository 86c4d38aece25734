#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crgimsc/dataset.hpp"
#include "crgimsc/graph.hpp"
#include "crgimsc/metrics.hpp"
#include "crgimsc/nmf.hpp"
#include "crgimsc/types.hpp"

namespace crgimsc {

struct SolverConfig {
    Real alpha = 10.0;   // weight of the Laplacian term
    Real beta = 0.1;     // weight of the consistency term
    Index k = 2;         // cluster count
    int max_iters = 300;
    Real rel_tol = 1e-6; // relative objective-change stop threshold
    Real eps_floor = 1e-10;
    int nmf_iters = 200;
    std::uint64_t seed = 0;

    void validate(const MultiViewDataset& dataset) const {
        if (alpha <= 0 || beta <= 0) throw std::runtime_error("alpha and beta must be positive");
        if (max_iters < 1) throw std::runtime_error("max_iters must be at least 1");
        if (rel_tol <= 0 || eps_floor <= 0) throw std::runtime_error("rel_tol and eps_floor must be positive");
        Index min_nv = dataset.n();
        for (Index v = 0; v < dataset.view_count(); ++v)
            min_nv = std::min(min_nv, dataset.views[static_cast<std::size_t>(v)].sample_count());
        if (k < 2 || k >= min_nv)
            throw std::runtime_error("cluster count must satisfy 2 <= k < min_v n^v");
    }
};

struct SolverState {
    Matrix U;                    // k x n, nonnegative common representation
    std::vector<Matrix> U_views; // k x n^v, orthonormal rows
    int iteration = 0;
    bool converged = false;
    std::vector<Real> objective_trace;
    std::vector<Real> nmi_trace; // filled only when fit() is given labels
};

// M = M_plus - M_minus with both parts elementwise nonnegative.
template <typename Derived>
std::pair<Matrix, Matrix> split_pos_neg(const Eigen::MatrixBase<Derived>& m) {
    const Matrix abs = m.cwiseAbs();
    return {(abs + m) / 2, (abs - m) / 2};
}

// Quantities that persist across iterations: the per-view Gram matrices
// P^v = (X^v)^T X^v, the zero-diagonal masks A^v, the restricted connectivity
// Q^v = (M^v)^T U^T U M^v (kept in sync with U), and the +/- split of
// (U^v)^T U^v (kept in sync with U_views).
struct SolverWorkspace {
    std::vector<MarkMatrix> marks;
    std::vector<Matrix> P;
    std::vector<Matrix> A;
    std::vector<Matrix> Q;
    std::vector<Matrix> pos;
    std::vector<Matrix> neg;

    static SolverWorkspace build(const MultiViewDataset& dataset) {
        SolverWorkspace ws;
        for (Index v = 0; v < dataset.view_count(); ++v) {
            const auto& x = dataset.views[static_cast<std::size_t>(v)].data;
            ws.marks.push_back(mark_matrix(dataset.presence, v));
            ws.P.push_back(x.transpose() * x);
            Matrix a = Matrix::Ones(x.cols(), x.cols());
            a.diagonal().setZero();
            ws.A.push_back(std::move(a));
            ws.Q.emplace_back();
            ws.pos.emplace_back();
            ws.neg.emplace_back();
        }
        return ws;
    }

    void refresh_connectivity(const Matrix& u) {
        for (std::size_t v = 0; v < marks.size(); ++v) {
            const Matrix g = gather_columns(u, marks[v]);
            Q[v] = g.transpose() * g;
        }
    }
};

// NMF-based initialization: U = (1/V) sum_v Z^v (M^v)^T + 0.1, where Z^v is
// the rank-k coefficient matrix of X^v. Strictly positive by construction.
inline Matrix init_U(const MultiViewDataset& dataset, const SolverConfig& config) {
    Rng rng(config.seed);
    const Index n = dataset.n();
    const Real v_count = static_cast<Real>(dataset.view_count());
    Matrix u = Matrix::Constant(config.k, n, 0.1);
    for (Index v = 0; v < dataset.view_count(); ++v) {
        const auto& x = dataset.views[static_cast<std::size_t>(v)].data;
        const NmfResult f = nmf_multiplicative(x, config.k, config.nmf_iters, rng);
        const MarkMatrix mark = mark_matrix(dataset.presence, v);
        for (Index j = 0; j < mark.existing_count(); ++j)
            u.col(mark.global_index[static_cast<std::size_t>(j)]) += f.coeff.col(j) / v_count;
    }
    if (!u.allFinite()) throw std::runtime_error("non-finite initialization from nmf");
    return u;
}

// For each view, the rows of U^v become the k eigenvectors of smallest
// eigenvalue of alpha L^v - 2 beta Q^v (symmetrized against rounding).
// Refreshes the +/- split of (U^v)^T U^v.
inline void update_view_embeddings(SolverState& state, SolverWorkspace& ws, const GraphSet& graphs,
                                   const SolverConfig& config) {
    const std::size_t v_count = ws.marks.size();
    state.U_views.resize(v_count);
    for (std::size_t v = 0; v < v_count; ++v) {
        Matrix c = config.alpha * graphs.laplacian[v] - 2 * config.beta * ws.Q[v];
        c = ((c + c.transpose()) / 2).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(c);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("eigen decomposition failed for view " + std::to_string(v));
        state.U_views[v] = es.eigenvectors().leftCols(config.k).transpose();
        std::tie(ws.pos[v], ws.neg[v]) = split_pos_neg(state.U_views[v].transpose() * state.U_views[v]);
    }
}

// U <- U .* (num ./ max(den, floor))^{1/4}, then floored: zeros are absorbing
// under a multiplicative rule, so entries never drop below the floor.
inline Matrix multiplicative_ratio_step(const Matrix& u, const Matrix& num, const Matrix& den, Real floor) {
    Matrix out = (u.array() * (num.array() / den.array().max(floor)).pow(0.25)).matrix();
    return out.cwiseMax(floor);
}

// The fourth-root multiplicative update of the common representation. The
// workspace Q^v must correspond to the incoming U; it is recomputed from the
// updated U before returning.
inline void update_common_representation(SolverState& state, SolverWorkspace& ws, const SolverConfig& config) {
    const Index k = state.U.rows();
    const Index n = state.U.cols();
    const Real beta = config.beta;
    Matrix num = Matrix::Zero(k, n);
    Matrix den = Matrix::Zero(k, n);
    for (std::size_t v = 0; v < ws.marks.size(); ++v) {
        const MarkMatrix& mark = ws.marks[v];
        const Matrix g = gather_columns(state.U, mark);
        const Matrix qa = ws.Q[v].cwiseProduct(ws.A[v]);
        const Matrix pa = ws.P[v].cwiseProduct(ws.A[v]);

        const Matrix num_v = 2 * (g * pa) + 2 * beta * (g * ws.pos[v]);
        const Matrix den_v = g * (ws.P[v] * qa).cwiseProduct(ws.A[v]) +
                             g * (qa * ws.P[v]).cwiseProduct(ws.A[v]) +
                             2 * beta * (g * ws.Q[v]) +
                             2 * beta * (g * ws.neg[v]);
        for (Index j = 0; j < mark.existing_count(); ++j) {
            const Index col = mark.global_index[static_cast<std::size_t>(j)];
            num.col(col) += num_v.col(j);
            den.col(col) += den_v.col(j);
        }
    }
    state.U = multiplicative_ratio_step(state.U, num, den, config.eps_floor);
    if (!state.U.allFinite())
        throw std::runtime_error("non-finite entries after multiplicative update");
    ws.refresh_connectivity(state.U);
}

// Full objective: sum over views of the self-representation residual
// ||X - X(Q .* A)||_F^2, the spectral term alpha tr(U^v L^v (U^v)^T) and the
// consistency term beta ||Q - (U^v)^T U^v||_F^2. The residual is evaluated
// through P^v = (X^v)^T X^v.
inline Real objective(const SolverState& state, const SolverWorkspace& ws, const GraphSet& graphs,
                      const SolverConfig& config) {
    Real total = 0;
    for (std::size_t v = 0; v < ws.marks.size(); ++v) {
        const Matrix& q = ws.Q[v];
        const Matrix qa = q.cwiseProduct(ws.A[v]);
        const Matrix p_qa = ws.P[v] * qa;
        const Real residual = ws.P[v].trace() - 2 * ws.P[v].cwiseProduct(qa).sum() +
                              p_qa.cwiseProduct(qa).sum();
        const Real spectral = (state.U_views[v] * graphs.laplacian[v] * state.U_views[v].transpose()).trace();
        const Real consistency = (q - state.U_views[v].transpose() * state.U_views[v]).squaredNorm();
        total += residual + config.alpha * spectral + config.beta * consistency;
    }
    return total;
}

// Reduced objective L(U) with U^v held fixed:
// sum_v tr((Q.*A)^T P (Q.*A)) - 2 tr(P (Q.*A)) + beta tr(Q^T Q)
//       - 2 beta tr(Q^T (U^v)^T U^v).
inline Real reduced_objective(const SolverState& state, const SolverWorkspace& ws, const SolverConfig& config) {
    Real total = 0;
    for (std::size_t v = 0; v < ws.marks.size(); ++v) {
        const Matrix& q = ws.Q[v];
        const Matrix qa = q.cwiseProduct(ws.A[v]);
        const Matrix p_qa = ws.P[v] * qa;
        const Matrix uvtuv = state.U_views[v].transpose() * state.U_views[v];
        total += p_qa.cwiseProduct(qa).sum() - 2 * ws.P[v].cwiseProduct(qa).sum() +
                 config.beta * q.squaredNorm() - 2 * config.beta * q.cwiseProduct(uvtuv).sum();
    }
    return total;
}

// Column argmax; ties break to the lowest row index.
inline std::vector<int> assign_clusters(const Matrix& u) {
    std::vector<int> labels(static_cast<std::size_t>(u.cols()));
    for (Index j = 0; j < u.cols(); ++j) {
        Index best = 0;
        for (Index i = 1; i < u.rows(); ++i)
            if (u(i, j) > u(best, j)) best = i;
        labels[static_cast<std::size_t>(j)] = static_cast<int>(best);
    }
    return labels;
}

// Alternating optimization: NMF init, then eigen step / multiplicative step
// until the relative change of the full objective drops below rel_tol or the
// iteration budget runs out (which is not an error; the converged flag says
// which). When labels are given, NMI against them is recorded per iteration.
inline SolverState fit(const MultiViewDataset& dataset, const GraphSet& graphs, const SolverConfig& config,
                       const std::vector<int>* labels = nullptr) {
    config.validate(dataset);
    SolverState state;
    SolverWorkspace ws = SolverWorkspace::build(dataset);
    state.U = init_U(dataset, config);
    ws.refresh_connectivity(state.U);

    Real prev = 0;
    for (int t = 1; t <= config.max_iters; ++t) {
        update_view_embeddings(state, ws, graphs, config);
        update_common_representation(state, ws, config);
        const Real obj = objective(state, ws, graphs, config);
        state.objective_trace.push_back(obj);
        if (labels) state.nmi_trace.push_back(nmi(*labels, assign_clusters(state.U)));
        state.iteration = t;
        if (t > 1 && std::abs(obj - prev) / std::max(std::abs(prev), config.eps_floor) < config.rel_tol) {
            state.converged = true;
            break;
        }
        prev = obj;
    }
    return state;
}

} // namespace crgimsc
