#pragma once

#include <vector>

#include "randfact/dense.hpp"
#include "randfact/stream.hpp"

namespace randfact {

/// Randomized SVD: sketch the range with q power passes (q = 0 is the plain
/// single sketch), project, factorize the small projected matrix, and lift.
/// The k + p sketch columns are truncated back to rank k unless
/// keep_oversamples is set, in which case all captured directions stay and
/// ||A - U D V^T||_F equals the basis residual ||A - Q Q^T A||_F exactly.
SvdFactors rsvd(const DenseMatrix& a, idx k, idx p, idx q, std::uint64_t seed,
                bool keep_oversamples = false, bool reorthonormalize = false);

/// Rank-k symmetric eigendecomposition A ~ U diag(lambda) U^T.
/// conditioning_warning flags an ill-conditioned core solve (the small
/// least-squares system that replaces a second pass over A).
struct LowRankEvd {
    DenseMatrix U;
    std::vector<double> lambda;
    bool conditioning_warning = false;
};

/// Single-pass eigendecomposition of a symmetric matrix served block by
/// block. The sketch Y = A G accumulates during the one traversal; the core
/// matrix C ~ Q^T A Q is then recovered from the sketch alone by a stacked
/// least-squares solve (both C M = N and M^T C = N^T, M = Q^T G, N = Q^T Y),
/// symmetrized, and diagonalized. By default Q keeps only the k dominant
/// directions of Y; use_full_width keeps all k + p, which trades a larger
/// core solve for accuracy, and still returns k pairs.
LowRankEvd single_pass_evd(MatrixStream& stream, idx k, idx p, std::uint64_t seed,
                           bool use_full_width = false);

/// Single-pass SVD of a general matrix served block by block. One traversal
/// accumulates both sketches Yc = A Gc and Yr = A^T Gr; the k x k core
/// C ~ Qc^T A Qr comes from the stacked least-squares system
/// (Gr^T Qc) C = Yr^T Qr and C (Qr^T Gc) = Qc^T Yc.
SvdFactors single_pass_svd(MatrixStream& stream, idx k, idx p, std::uint64_t seed);

/// Nystrom eigendecomposition for symmetric positive semidefinite input:
/// B1 = A Q, B2 = Q^T B1 = C^T C, F = B1 C^{-1}, A ~ F F^T = U Sigma^2 U^T.
/// The returned eigenvalues are the squared singular values of F, hence
/// always >= 0. Inputs further than 1e-10 * ||A||_F from symmetric are
/// rejected; a failed Cholesky is retried once with a tiny trace shift and
/// reported through conditioning_warning.
LowRankEvd nystrom_evd(const DenseMatrix& a, idx k, idx p, std::uint64_t seed);

/// Which side(s) an interpolative decomposition selects.
enum class IdSide { Col, Row, Double };

/// Interpolative decomposition in terms of actual rows/columns of A:
///  - Col:    A ~ A(:, Js) Z          with Z(:, Js) = I_k
///  - Row:    A ~ X A(Is, :)          with X(Is, :) = I_k
///  - Double: A ~ X A(Is, Js) Z
/// rank_truncated reports that the pivoted QR underneath found the numerical
/// rank to be smaller than the requested k (the factors use that rank).
struct IdFactors {
    IdSide side = IdSide::Col;
    std::vector<idx> Js;
    std::vector<idx> Is;
    DenseMatrix Z;
    DenseMatrix X;
    bool rank_truncated = false;
};

/// Deterministic rank-k ID built on column-pivoted QR: the selected columns
/// are the pivots, and the interpolation coefficients solve the leading
/// triangular block against the rest (their magnitudes stay modest in
/// practice). Row works on A^T; Double nests a row ID inside the column ID.
IdFactors id_deterministic(const DenseMatrix& a, idx k, IdSide side);

/// Randomized row ID: a tall sketch Y = (A A^T)^q A G inherits the row
/// geometry of A, and a row ID of Y (indices and interpolation matrix both)
/// is a row ID of A itself.
IdFactors randomized_id(const DenseMatrix& a, idx k, idx p, idx q, std::uint64_t seed);

/// Row ID where the sketch comes from the structured subsampled-DFT operator
/// instead of a Gaussian: Y has 2(k + p) real columns (real and imaginary
/// parts), and its row ID transfers to A as above. One ordinary pass over A,
/// but O(m n log n) sketch cost instead of O(m n (k + p)).
IdFactors fast_randomized_id(const DenseMatrix& a, idx k, idx p, std::uint64_t seed);

/// CUR factors: A ~ C U R with C = A(:, Js), R = A(Is, :) actual columns and
/// rows of A. cond_C / cond_R are the spectral condition numbers of those
/// panels; warning is set when either exceeds 1e8, since the link matrix U
/// then amplifies noise.
struct CurFactors {
    std::vector<idx> Js;
    std::vector<idx> Is;
    DenseMatrix U;
    double cond_C = 0.0;
    double cond_R = 0.0;
    bool warning = false;
};

/// Randomized CUR: a wide sketch Y = G A (with optional power passes) yields
/// the column choice via a column ID, the row choice follows from a row ID of
/// the chosen columns, and U solves R^T U^T = Z^T in least squares.
CurFactors randomized_cur(const DenseMatrix& a, idx k, idx p, idx q, std::uint64_t seed);

} // namespace randfact
