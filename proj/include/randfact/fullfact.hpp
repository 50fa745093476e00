#pragma once

#include "randfact/dense.hpp"

namespace randfact {

/// Full pivoted QR with randomized block pivoting: each block of b pivot
/// columns is chosen from a small (b + p) x n' sketch of the trailing matrix
/// instead of exact column norms, which turns the classical one-column-at-a-
/// time sweep into BLAS-3 panels. A fresh sketch is drawn per block. Output
/// contract matches cpqr: A P = Q R with Q m x min(m,n) orthonormal, R upper
/// triangular with non-negative diagonal, perm the pivot order.
PivotedQr hqrrp(const DenseMatrix& a, idx b, idx p, std::uint64_t seed);

namespace detail {

/// Test hook: exact_norms replaces the sketch with the trailing matrix
/// itself, so with b = 1 the pivot sequence reproduces classical
/// column-pivoted QR exactly.
PivotedQr hqrrp_opts(const DenseMatrix& a, idx b, idx p, std::uint64_t seed,
                     bool exact_norms);

} // namespace detail

/// Rank-revealing UTV factorization A = U T V^T with U, V square orthogonal.
/// T is upper trapezoidal when m >= n and lower trapezoidal otherwise, with
/// each diagonal b x b block already diagonalized, so diag(T) tracks the
/// singular values far more closely than a pivoted QR diagonal does.
struct UtvFactors {
    DenseMatrix U;
    DenseMatrix T;
    DenseMatrix V;
};

/// Blocked randomized UTV: per step, a sketch of the trailing block's row
/// space (q power passes) supplies the right rotation, a panel QR supplies
/// the left one, and a dense SVD of the b x b corner concentrates that
/// block's mass onto the diagonal. Larger q sharpens the diagonal toward the
/// singular values at the cost of extra passes.
UtvFactors randutv(const DenseMatrix& a, idx b, idx q, std::uint64_t seed);

} // namespace randfact
