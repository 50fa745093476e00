#pragma once

#include <utility>
#include <vector>

#include "randfact/common.hpp"

namespace randfact {

/// Column-major dense matrix of 64-bit reals. Entries must be finite when the
/// data comes from outside the library; factory helpers below enforce that.
struct DenseMatrix {
    idx rows = 0;
    idx cols = 0;
    std::vector<double> data; // column-major, rows*cols entries

    DenseMatrix() = default;
    DenseMatrix(idx m, idx n);

    double& operator()(idx i, idx j) { return data[static_cast<std::size_t>(j * rows + i)]; }
    double operator()(idx i, idx j) const { return data[static_cast<std::size_t>(j * rows + i)]; }

    bool empty() const { return rows == 0 || cols == 0; }
};

/// m x n zero matrix.
DenseMatrix zeros(idx m, idx n);

/// n x n identity.
DenseMatrix identity(idx n);

/// Build from column-major raw data; rejects non-finite entries.
DenseMatrix from_data(idx m, idx n, std::vector<double> data);

/// True when every entry is finite.
bool all_finite(const DenseMatrix& a);

DenseMatrix transpose(const DenseMatrix& a);

/// C = op(A) * op(B) with op controlled by the trans flags.
/// Threaded over output columns for large products; the per-column
/// accumulation order is fixed, so results are bitwise reproducible
/// for every thread count.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b,
                     bool trans_a = false, bool trans_b = false);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double s);

/// y = op(A) * x.
std::vector<double> matvec(const DenseMatrix& a, const std::vector<double>& x,
                           bool trans = false);

double frob_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double vec_norm(const std::vector<double>& x);

/// Half-open rectangle A(r0:r1, c0:c1).
DenseMatrix submatrix(const DenseMatrix& a, idx r0, idx r1, idx c0, idx c1);

/// Copy of the selected columns, in the given order.
DenseMatrix select_columns(const DenseMatrix& a, const std::vector<idx>& cols);

/// Copy of the selected rows, in the given order.
DenseMatrix select_rows(const DenseMatrix& a, const std::vector<idx>& rows);

/// Write block B into A at (r0, c0).
void set_submatrix(DenseMatrix& a, idx r0, idx c0, const DenseMatrix& b);

DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix vcat(const DenseMatrix& a, const DenseMatrix& b);

/// Thin SVD: A = U * diag(D) * V^T with U m x r, V n x r, r = min(m, n),
/// D non-negative and non-increasing.
struct SvdFactors {
    DenseMatrix U;
    std::vector<double> D;
    DenseMatrix V;
};

/// Column-pivoted QR output: A(:, perm) = Q * R, Q m x stopped_rank with
/// orthonormal columns, R stopped_rank x n upper triangular up to the stop
/// column with R(i,i) >= 0, residual_frob = ||A(:, perm) - Q R||_F tracked by
/// norm down-dating at the stop point.
struct PivotedQr {
    DenseMatrix Q;
    DenseMatrix R;
    std::vector<idx> perm;
    idx stopped_rank = 0;
    double residual_frob = 0.0;
};

/// Stop rule for cpqr: fixed rank, residual tolerance, or run to completion.
struct CpqrStop {
    enum class Mode { Rank, Tolerance, Full };
    Mode mode = Mode::Full;
    idx k = 0;
    double eps = 0.0;

    static CpqrStop rank(idx k);
    static CpqrStop tolerance(double eps);
    static CpqrStop full();
};

/// Unpivoted Householder QR: A = Q R, Q economy m x min(m,n), R(i,i) >= 0.
/// Rank deficiency yields zero rows in R; Q columns stay orthonormal.
std::pair<DenseMatrix, DenseMatrix> householder_qr(const DenseMatrix& a);

/// Orthonormal basis for the column space. Columns whose Gram-Schmidt
/// residual falls below 1e-13 * ||X||_F are dropped, so the result can have
/// fewer columns than X (zero for X = 0).
DenseMatrix orth(const DenseMatrix& x);

/// Greedy largest-column CPQR with squared-norm down-dating. In Full mode the
/// sweep also halts once every remaining column norm is below 1e-14 * ||A||_F.
PivotedQr cpqr(const DenseMatrix& a, const CpqrStop& stop);

/// One-sided Jacobi SVD. Raises ConvergenceError if 30 sweeps do not settle.
/// Reconstruction is accurate to ~1e-10 * ||A||_F at desk scale.
SvdFactors svd_dense(const DenseMatrix& a);

/// Symmetric eigendecomposition A = U diag(lambda) U^T via two-sided cyclic
/// Jacobi, eigenvalues ordered by decreasing |lambda|. Input must be square;
/// it is symmetrized internally to kill rounding asymmetry.
std::pair<DenseMatrix, std::vector<double>> eig_sym(const DenseMatrix& a);

/// Upper-triangular Cholesky factor C with C^T C = B for symmetric positive
/// definite B. A pivot at or below 1e-14 * max initial diagonal raises
/// NotPositiveDefiniteError.
DenseMatrix cholesky(const DenseMatrix& b);

/// Solve R X = B for upper triangular R.
DenseMatrix solve_upper(const DenseMatrix& r, const DenseMatrix& b);

/// Solve X R = B for upper triangular R.
DenseMatrix solve_upper_right(const DenseMatrix& b, const DenseMatrix& r);

/// Minimum-norm least-squares solution of M X = B through the SVD, dropping
/// singular values below 1e-12 * sigma_max.
DenseMatrix least_squares(const DenseMatrix& m, const DenseMatrix& b);

/// Moore-Penrose pseudoinverse with the same 1e-12 * sigma_max truncation.
DenseMatrix pseudoinverse(const DenseMatrix& m);

/// Compact-WY representation of a panel's Householder reflectors:
/// Q = H_1 ... H_w = I - V T V^T with V unit lower trapezoidal, T upper
/// triangular. Lets the blocked factorizations update trailing matrices with
/// matrix-matrix products instead of one reflector at a time.
struct ReflectorPanel {
    DenseMatrix V;            // m x w
    std::vector<double> beta; // w
    DenseMatrix T;            // w x w
};

/// Factor panel P (overwritten with R in its upper triangle) and return the
/// compact-WY reflectors.
ReflectorPanel panel_qr(DenseMatrix& p);

/// C <- Q C (trans = false) or Q^T C (trans = true).
void apply_panel_left(const ReflectorPanel& panel, DenseMatrix& c, bool trans);

/// C <- C Q.
void apply_panel_right(DenseMatrix& c, const ReflectorPanel& panel);

/// Extend Q (m x r, orthonormal columns) to an m x m orthonormal matrix whose
/// first r columns are Q.
DenseMatrix complete_orthonormal(const DenseMatrix& q, idx m);

/// Threading control. Thread count defaults to min(hardware, 8), is capped by
/// the RANDFACT_THREADS environment variable, and can be forced (CLI
/// --deterministic forces 1). Results never depend on the thread count.
void set_max_threads(int n);
int max_threads();

} // namespace randfact
