#pragma once

#include <stdexcept>

#include "crgimsc/rng.hpp"
#include "crgimsc/types.hpp"

namespace crgimsc {

// X ~= basis * coeff with basis d x k and coeff k x n, both nonnegative.
struct NmfResult {
    Matrix basis;
    Matrix coeff;
};

// Two-factor multiplicative updates for the Frobenius loss, seeded
// uniform(0.1, 1.1) init. Denominators are floored so an exactly-zero
// numerator drives the factor to an exact zero instead of NaN.
inline NmfResult nmf_multiplicative(const Matrix& x, Index rank, int iters, Rng& rng) {
    if (rank < 1) throw std::runtime_error("nmf rank must be positive");
    const Real den_floor = 1e-12;
    NmfResult r;
    r.basis.resize(x.rows(), rank);
    r.coeff.resize(rank, x.cols());
    for (Index i = 0; i < r.basis.size(); ++i) r.basis(i) = uniform_real(rng, 0.1, 1.1);
    for (Index i = 0; i < r.coeff.size(); ++i) r.coeff(i) = uniform_real(rng, 0.1, 1.1);

    for (int it = 0; it < iters; ++it) {
        const Matrix wt_x = r.basis.transpose() * x;
        const Matrix wt_w_h = r.basis.transpose() * r.basis * r.coeff;
        r.coeff.array() *= wt_x.array() / wt_w_h.array().max(den_floor);

        const Matrix x_ht = x * r.coeff.transpose();
        const Matrix w_h_ht = r.basis * (r.coeff * r.coeff.transpose());
        r.basis.array() *= x_ht.array() / w_h_ht.array().max(den_floor);
    }
    if (!r.basis.allFinite() || !r.coeff.allFinite())
        throw std::runtime_error("nmf diverged to non-finite values");
    return r;
}

} // namespace crgimsc
