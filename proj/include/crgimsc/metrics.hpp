#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "crgimsc/types.hpp"

namespace crgimsc {
namespace detail {

// relabel to dense ids in order of first appearance
inline std::vector<int> dense_ids(const std::vector<int>& labels, int& count) {
    std::unordered_map<int, int> map;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = map.try_emplace(labels[i], static_cast<int>(map.size()));
        out[i] = it->second;
    }
    count = static_cast<int>(map.size());
    return out;
}

// counts(i, j) = |{ s : a_s = i and b_s = j }| over dense ids
inline MatrixX<long long> contingency(const std::vector<int>& a, const std::vector<int>& b,
                                      int& ka, int& kb) {
    const std::vector<int> da = dense_ids(a, ka);
    const std::vector<int> db = dense_ids(b, kb);
    MatrixX<long long> counts = MatrixX<long long>::Zero(ka, kb);
    for (std::size_t i = 0; i < a.size(); ++i) counts(da[i], db[i]) += 1;
    return counts;
}

// true iff the two labelings induce the same partition (bijective relabeling)
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::unordered_map<int, int> fwd, bwd;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [fit, fnew] = fwd.try_emplace(a[i], b[i]);
        if (!fnew && fit->second != b[i]) return false;
        auto [bit, bnew] = bwd.try_emplace(b[i], a[i]);
        if (!bnew && bit->second != a[i]) return false;
    }
    return true;
}

// minimum-cost perfect matching on a square integer cost matrix
// (Kuhn-Munkres with potentials, O(m^3))
inline long long hungarian_min_cost(const MatrixX<long long>& cost) {
    const int m = static_cast<int>(cost.rows());
    const long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(m + 1, 0), v(m + 1, 0);
    std::vector<int> match(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= m; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<long long> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            long long delta = inf;
            for (int j = 1; j <= m; ++j)
                if (!used[j]) {
                    const long long cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (int j = 0; j <= m; ++j)
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    long long total = 0;
    for (int j = 1; j <= m; ++j) total += cost(match[j] - 1, j - 1);
    return total;
}

inline void check_lengths(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::runtime_error("label vectors differ in length");
    if (a.empty()) throw std::runtime_error("label vectors are empty");
}

} // namespace detail

// Normalized mutual information with sqrt(H_a * H_b) normalization.
// Equivalent partitions score exactly 1; if only one side is a single
// cluster the score is 0 by convention.
inline Real nmi(const std::vector<int>& a, const std::vector<int>& b) {
    detail::check_lengths(a, b);
    if (detail::same_partition(a, b)) return 1.0;
    int ka = 0, kb = 0;
    const MatrixX<long long> counts = detail::contingency(a, b, ka, kb);
    const Real n = static_cast<Real>(a.size());
    const VectorX<long long> row = counts.rowwise().sum();
    const VectorX<long long> col = counts.colwise().sum().transpose();

    Real ha = 0, hb = 0;
    for (int i = 0; i < ka; ++i)
        if (row(i) > 0) ha -= static_cast<Real>(row(i)) / n * std::log(static_cast<Real>(row(i)) / n);
    for (int j = 0; j < kb; ++j)
        if (col(j) > 0) hb -= static_cast<Real>(col(j)) / n * std::log(static_cast<Real>(col(j)) / n);
    if (ha == 0 || hb == 0) return 0.0;

    Real mi = 0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j)
            if (counts(i, j) > 0) {
                const Real nij = static_cast<Real>(counts(i, j));
                mi += nij / n * std::log(n * nij / (static_cast<Real>(row(i)) * static_cast<Real>(col(j))));
            }
    return std::clamp(mi / std::sqrt(ha * hb), Real(0), Real(1));
}

// Fraction of samples matched under the best injective cluster-to-class map,
// found by optimal assignment on the zero-padded square contingency table.
inline Real accuracy(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
    detail::check_lengths(true_labels, pred_labels);
    int kp = 0, kt = 0;
    const MatrixX<long long> counts = detail::contingency(pred_labels, true_labels, kp, kt);
    const int m = std::max(kp, kt);
    MatrixX<long long> cost = MatrixX<long long>::Zero(m, m);
    cost.topLeftCorner(kp, kt) = -counts;
    const long long matched = -detail::hungarian_min_cost(cost);
    return static_cast<Real>(matched) / static_cast<Real>(true_labels.size());
}

// Pairwise counting over all unordered sample pairs: TP pairs co-clustered in
// both labelings, FP in the prediction only, FN in the truth only. 0/0 -> 0.
inline std::pair<Real, Real> pairwise_fscore_precision(const std::vector<int>& true_labels,
                                                       const std::vector<int>& pred_labels) {
    detail::check_lengths(true_labels, pred_labels);
    if (true_labels.size() < 2) throw std::runtime_error("pairwise metrics need at least 2 samples");
    int kt = 0, kp = 0;
    const MatrixX<long long> counts = detail::contingency(true_labels, pred_labels, kt, kp);
    const auto pairs2 = [](long long x) { return x * (x - 1) / 2; };

    long long tp = 0;
    for (int i = 0; i < kt; ++i)
        for (int j = 0; j < kp; ++j) tp += pairs2(counts(i, j));
    long long pairs_true = 0, pairs_pred = 0;
    const VectorX<long long> row = counts.rowwise().sum();
    const VectorX<long long> col = counts.colwise().sum().transpose();
    for (int i = 0; i < kt; ++i) pairs_true += pairs2(row(i));
    for (int j = 0; j < kp; ++j) pairs_pred += pairs2(col(j));

    const long long fp = pairs_pred - tp;
    const long long fn = pairs_true - tp;
    const Real precision = tp + fp > 0 ? static_cast<Real>(tp) / static_cast<Real>(tp + fp) : Real(0);
    const Real recall = tp + fn > 0 ? static_cast<Real>(tp) / static_cast<Real>(tp + fn) : Real(0);
    const Real f = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : Real(0);
    return {f, precision};
}

struct EvalReport {
    Real nmi = 0;
    Real accuracy = 0;
    Real f_score = 0;
    Real precision = 0;
    Index n = 0;
    int k_true = 0;
    int k_pred = 0;
};

inline EvalReport evaluate(const std::vector<int>& true_labels, const std::vector<int>& pred_labels) {
    EvalReport r;
    r.nmi = nmi(true_labels, pred_labels);
    r.accuracy = accuracy(true_labels, pred_labels);
    std::tie(r.f_score, r.precision) = pairwise_fscore_precision(true_labels, pred_labels);
    r.n = static_cast<Index>(true_labels.size());
    detail::dense_ids(true_labels, r.k_true);
    detail::dense_ids(pred_labels, r.k_pred);
    return r;
}

struct MetricStat {
    Real mean = 0;
    Real std = 0;
};

struct EvalSummary {
    MetricStat nmi;
    MetricStat accuracy;
    MetricStat f_score;
    MetricStat precision;
    int repeats = 0;
};

// Sample mean and population standard deviation (divisor n) per metric.
inline EvalSummary aggregate(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw std::runtime_error("cannot aggregate an empty report list");
    const Real n = static_cast<Real>(reports.size());
    const auto stat = [&](auto field) {
        MetricStat s;
        for (const auto& r : reports) s.mean += field(r);
        s.mean /= n;
        Real var = 0;
        for (const auto& r : reports) var += (field(r) - s.mean) * (field(r) - s.mean);
        s.std = std::sqrt(var / n);
        return s;
    };
    EvalSummary out;
    out.nmi = stat([](const EvalReport& r) { return r.nmi; });
    out.accuracy = stat([](const EvalReport& r) { return r.accuracy; });
    out.f_score = stat([](const EvalReport& r) { return r.f_score; });
    out.precision = stat([](const EvalReport& r) { return r.precision; });
    out.repeats = static_cast<int>(reports.size());
    return out;
}

} // namespace crgimsc
