#include "randfact/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "randfact/rangefinder.hpp"
#include "randfact/sketch.hpp"

namespace randfact {

namespace {

void check_rank_params(idx k, idx p, idx m, idx n, const char* where) {
    if (k < 1) throw ParameterError(std::string(where) + ": k must be at least 1");
    if (p < 0) throw ParameterError(std::string(where) + ": p must be non-negative");
    if (k + p > std::min(m, n)) {
        throw ParameterError(std::string(where) + ": k + p exceeds min(m, n)");
    }
}

/// Columns 0..width of the left singular factor of y.
DenseMatrix dominant_left(const DenseMatrix& y, idx width) {
    const SvdFactors f = svd_dense(y);
    return submatrix(f.U, 0, y.rows, 0, std::min<idx>(width, f.U.cols));
}

/// sigma_max / sigma_min of the small least-squares design matrix; huge when
/// the sketch failed to pin the core down.
bool ill_conditioned(const DenseMatrix& m) {
    const SvdFactors f = svd_dense(m);
    if (f.D.empty()) return true;
    const double lo = f.D.back(), hi = f.D.front();
    return lo <= 0.0 || hi / lo > 1e8;
}

double cond_number(const DenseMatrix& m) {
    const SvdFactors f = svd_dense(m);
    if (f.D.empty() || f.D.back() <= 0.0) return std::numeric_limits<double>::infinity();
    return f.D.front() / f.D.back();
}

/// Core of the rank-k column ID: pivoted QR, then interpolation coefficients
/// from the leading triangle. Returns {Js, Z, rank_truncated}.
struct ColIdCore {
    std::vector<idx> Js;
    DenseMatrix Z;
    bool rank_truncated = false;
};

ColIdCore col_id_core(const DenseMatrix& a, idx k) {
    const PivotedQr qr = cpqr(a, CpqrStop::rank(k));
    const idx ke = std::min<idx>(k, qr.stopped_rank);
    ColIdCore out;
    out.rank_truncated = ke < k;
    out.Js.assign(qr.perm.begin(), qr.perm.begin() + ke);
    out.Z = DenseMatrix(ke, a.cols);
    if (ke == 0) return out;
    for (idx j = 0; j < ke; ++j) out.Z(j, qr.perm[static_cast<std::size_t>(j)]) = 1.0;
    if (a.cols > ke) {
        const DenseMatrix s11 = submatrix(qr.R, 0, ke, 0, ke);
        const DenseMatrix s12 = submatrix(qr.R, 0, ke, ke, a.cols);
        const DenseMatrix t = solve_upper(s11, s12);
        for (idx j = 0; j + ke < a.cols; ++j) {
            const idx col = qr.perm[static_cast<std::size_t>(ke + j)];
            for (idx i = 0; i < ke; ++i) out.Z(i, col) = t(i, j);
        }
    }
    return out;
}

} // namespace

SvdFactors rsvd(const DenseMatrix& a, idx k, idx p, idx q, std::uint64_t seed,
                bool keep_oversamples, bool reorthonormalize) {
    RangeConfig cfg;
    cfg.k = k;
    cfg.p = p;
    cfg.q = q;
    cfg.seed = seed;
    cfg.reorthonormalize = reorthonormalize;
    const RangeBasis rb = power_range(a, cfg);
    SvdFactors out;
    if (rb.Q.cols == 0) {
        out.U = DenseMatrix(a.rows, 0);
        out.V = DenseMatrix(a.cols, 0);
        return out;
    }
    SvdFactors small = svd_dense(*rb.B);
    const idx keep = keep_oversamples ? static_cast<idx>(small.D.size())
                                      : std::min<idx>(k, static_cast<idx>(small.D.size()));
    out.U = multiply(rb.Q, submatrix(small.U, 0, small.U.rows, 0, keep));
    out.V = submatrix(small.V, 0, small.V.rows, 0, keep);
    out.D.assign(small.D.begin(), small.D.begin() + keep);
    return out;
}

LowRankEvd single_pass_evd(MatrixStream& stream, idx k, idx p, std::uint64_t seed,
                           bool use_full_width) {
    const idx n = stream.cols();
    if (stream.rows() != n) {
        throw ParameterError("single_pass_evd: input must be square (and symmetric)");
    }
    check_rank_params(k, p, n, n, "single_pass_evd");
    const idx ell = k + p;
    const DenseMatrix g = gaussian(seed, "spevd.G", n, ell);

    // The one and only traversal of A: Y = A G accumulated block by block.
    DenseMatrix y(n, ell);
    while (stream.has_next()) {
        const MatrixStream::Block blk = stream.next_block();
        const DenseMatrix gpart = submatrix(g, blk.col0, blk.col0 + blk.block.cols, 0, ell);
        y = add(y, multiply(blk.block, gpart));
    }

    const idx w = use_full_width ? ell : k;
    const DenseMatrix q = dominant_left(y, w);
    const idx wq = q.cols;
    const DenseMatrix m = multiply(q, g, true, false); // wq x ell
    const DenseMatrix nmat = multiply(q, y, true, false);

    // Stacked least squares for C ~ Q^T A Q from sketch identities alone:
    // C M = N (rows 0..wq*ell) and M^T C = N^T (the symmetric counterpart).
    const idx rows = 2 * wq * ell, cols = wq * wq;
    DenseMatrix design(rows, cols);
    DenseMatrix rhs(rows, 1);
    for (idx j = 0; j < ell; ++j) {
        for (idx i = 0; i < wq; ++i) {
            const idx r = i + j * wq;
            for (idx t = 0; t < wq; ++t) design(r, i + t * wq) = m(t, j);
            rhs(r, 0) = nmat(i, j);
        }
    }
    for (idx b = 0; b < wq; ++b) {
        for (idx a2 = 0; a2 < ell; ++a2) {
            const idx r = wq * ell + a2 + b * ell;
            for (idx t = 0; t < wq; ++t) design(r, t + b * wq) = m(t, a2);
            rhs(r, 0) = nmat(b, a2);
        }
    }
    const DenseMatrix cvec = least_squares(design, rhs);
    DenseMatrix c(wq, wq);
    for (idx j = 0; j < wq; ++j) {
        for (idx i = 0; i < wq; ++i) c(i, j) = cvec(i + j * wq, 0);
    }
    DenseMatrix csym(wq, wq);
    for (idx j = 0; j < wq; ++j) {
        for (idx i = 0; i < wq; ++i) csym(i, j) = 0.5 * (c(i, j) + c(j, i));
    }

    const auto [vhat, lam] = eig_sym(csym);
    const idx keep = std::min<idx>(k, wq);
    LowRankEvd out;
    out.U = multiply(q, submatrix(vhat, 0, wq, 0, keep));
    out.lambda.assign(lam.begin(), lam.begin() + keep);
    out.conditioning_warning = ill_conditioned(m);
    return out;
}

SvdFactors single_pass_svd(MatrixStream& stream, idx k, idx p, std::uint64_t seed) {
    const idx m = stream.rows(), n = stream.cols();
    check_rank_params(k, p, m, n, "single_pass_svd");
    const idx ell = k + p;
    const DenseMatrix gc = gaussian(seed, "spsvd.Gc", n, ell);
    const DenseMatrix gr = gaussian(seed, "spsvd.Gr", m, ell);

    // One traversal fills both sketches: Yc = A Gc and Yr = A^T Gr.
    DenseMatrix yc(m, ell);
    DenseMatrix yr(n, ell);
    while (stream.has_next()) {
        const MatrixStream::Block blk = stream.next_block();
        const idx w = blk.block.cols;
        const DenseMatrix gcpart = submatrix(gc, blk.col0, blk.col0 + w, 0, ell);
        yc = add(yc, multiply(blk.block, gcpart));
        set_submatrix(yr, blk.col0, 0, multiply(blk.block, gr, true, false));
    }

    const DenseMatrix qc = dominant_left(yc, k);
    const DenseMatrix qr = dominant_left(yr, k);
    const idx kc = qc.cols, kr = qr.cols, kk = std::min(kc, kr);
    const DenseMatrix qck = submatrix(qc, 0, m, 0, kk);
    const DenseMatrix qrk = submatrix(qr, 0, n, 0, kk);

    const DenseMatrix pmat = multiply(gr, qck, true, false); // ell x kk
    const DenseMatrix emat = multiply(yr, qrk, true, false); // ell x kk
    const DenseMatrix wmat = multiply(qrk, gc, true, false); // kk x ell
    const DenseMatrix fmat = multiply(qck, yc, true, false); // kk x ell

    // Stacked least squares for the core C ~ Qc^T A Qr:
    // P C = E (first kk*ell rows) and C W = F (second kk*ell rows).
    const idx rows = 2 * kk * ell, cols = kk * kk;
    DenseMatrix design(rows, cols);
    DenseMatrix rhs(rows, 1);
    for (idx b = 0; b < kk; ++b) {
        for (idx a2 = 0; a2 < ell; ++a2) {
            const idx r = a2 + b * ell;
            for (idx t = 0; t < kk; ++t) design(r, t + b * kk) = pmat(a2, t);
            rhs(r, 0) = emat(a2, b);
        }
    }
    for (idx j = 0; j < ell; ++j) {
        for (idx i = 0; i < kk; ++i) {
            const idx r = kk * ell + i + j * kk;
            for (idx t = 0; t < kk; ++t) design(r, i + t * kk) = wmat(t, j);
            rhs(r, 0) = fmat(i, j);
        }
    }
    const DenseMatrix cvec = least_squares(design, rhs);
    DenseMatrix c(kk, kk);
    for (idx j = 0; j < kk; ++j) {
        for (idx i = 0; i < kk; ++i) c(i, j) = cvec(i + j * kk, 0);
    }

    SvdFactors core = svd_dense(c);
    SvdFactors out;
    out.U = multiply(qck, core.U);
    out.V = multiply(qrk, core.V);
    out.D = std::move(core.D);
    return out;
}

LowRankEvd nystrom_evd(const DenseMatrix& a, idx k, idx p, std::uint64_t seed) {
    if (a.rows != a.cols) throw ParameterError("nystrom_evd: input must be square");
    const idx n = a.rows;
    check_rank_params(k, p, n, n, "nystrom_evd");
    const double af = frob_norm(a);
    const DenseMatrix at = transpose(a);
    if (frob_norm(subtract(a, at)) > 1e-10 * af) {
        throw ParameterError("nystrom_evd: input must be symmetric");
    }
    DenseMatrix work = scaled(add(a, at), 0.5);

    const DenseMatrix g = gaussian(seed, "nystrom.G", n, k + p);
    const DenseMatrix q = orth(multiply(work, g));
    LowRankEvd out;
    if (q.cols == 0) {
        out.U = DenseMatrix(n, 0);
        return out;
    }
    const DenseMatrix b1 = multiply(work, q);
    DenseMatrix b2 = multiply(q, b1, true, false);
    DenseMatrix b2s(b2.rows, b2.cols);
    for (idx j = 0; j < b2.cols; ++j) {
        for (idx i = 0; i < b2.rows; ++i) b2s(i, j) = 0.5 * (b2(i, j) + b2(j, i));
    }

    DenseMatrix chol(0, 0);
    try {
        chol = cholesky(b2s);
    } catch (const NotPositiveDefiniteError&) {
        // Tiny trace shift: resolves Cholesky breakdown from roundoff-level
        // negative pivots on nearly rank-deficient input.
        double tr = 0.0;
        for (idx i = 0; i < b2s.rows; ++i) tr += b2s(i, i);
        const double shift = 1e-12 * tr;
        for (idx i = 0; i < b2s.rows; ++i) b2s(i, i) += shift;
        chol = cholesky(b2s);
        out.conditioning_warning = true;
    }

    const DenseMatrix f = solve_upper_right(b1, chol);
    const SvdFactors fs = svd_dense(f);
    const idx keep = std::min<idx>(k, static_cast<idx>(fs.D.size()));
    out.U = submatrix(fs.U, 0, n, 0, keep);
    out.lambda.resize(static_cast<std::size_t>(keep));
    for (idx i = 0; i < keep; ++i) {
        const double s = fs.D[static_cast<std::size_t>(i)];
        out.lambda[static_cast<std::size_t>(i)] = s * s;
    }
    return out;
}

IdFactors id_deterministic(const DenseMatrix& a, idx k, IdSide side) {
    if (k < 1) throw ParameterError("id_deterministic: k must be at least 1");
    if (k > std::min(a.rows, a.cols)) {
        throw ParameterError("id_deterministic: k exceeds min(m, n)");
    }
    IdFactors out;
    out.side = side;
    switch (side) {
        case IdSide::Col: {
            ColIdCore core = col_id_core(a, k);
            out.Js = std::move(core.Js);
            out.Z = std::move(core.Z);
            out.rank_truncated = core.rank_truncated;
            break;
        }
        case IdSide::Row: {
            // A row ID of A is a column ID of A^T: A^T ~ A^T(:, Is) Z', so
            // A ~ Z'^T A(Is, :).
            ColIdCore core = col_id_core(transpose(a), k);
            out.Is = std::move(core.Js);
            out.X = transpose(core.Z);
            out.rank_truncated = core.rank_truncated;
            break;
        }
        case IdSide::Double: {
            ColIdCore col = col_id_core(a, k);
            out.Js = std::move(col.Js);
            out.Z = std::move(col.Z);
            ColIdCore row = col_id_core(transpose(select_columns(a, out.Js)),
                                        static_cast<idx>(out.Js.size()));
            out.Is = std::move(row.Js);
            out.X = transpose(row.Z);
            out.rank_truncated = col.rank_truncated || row.rank_truncated;
            break;
        }
    }
    return out;
}

IdFactors randomized_id(const DenseMatrix& a, idx k, idx p, idx q, std::uint64_t seed) {
    check_rank_params(k, p, a.rows, a.cols, "randomized_id");
    if (q < 0) throw ParameterError("randomized_id: q must be non-negative");
    const DenseMatrix g = gaussian(seed, "rid.G", a.cols, k + p);
    DenseMatrix y = multiply(a, g);
    for (idx t = 0; t < q; ++t) {
        y = multiply(a, multiply(a, y, true, false));
    }
    // Row selection and interpolation transfer from the sketch to A because
    // row picking commutes with the right factor linking them.
    ColIdCore core = col_id_core(transpose(y), k);
    IdFactors out;
    out.side = IdSide::Row;
    out.Is = std::move(core.Js);
    out.X = transpose(core.Z);
    out.rank_truncated = core.rank_truncated;
    return out;
}

IdFactors fast_randomized_id(const DenseMatrix& a, idx k, idx p, std::uint64_t seed) {
    if (k < 1) throw ParameterError("fast_randomized_id: k must be at least 1");
    if (p < 0) throw ParameterError("fast_randomized_id: p must be non-negative");
    if (k + p > a.cols) {
        throw ParameterError("fast_randomized_id: k + p exceeds the column count");
    }
    if (k > a.rows) throw ParameterError("fast_randomized_id: k exceeds the row count");
    const DenseMatrix y = srft_sample(a, k + p, seed);
    ColIdCore core = col_id_core(transpose(y), k);
    IdFactors out;
    out.side = IdSide::Row;
    out.Is = std::move(core.Js);
    out.X = transpose(core.Z);
    out.rank_truncated = core.rank_truncated;
    return out;
}

CurFactors randomized_cur(const DenseMatrix& a, idx k, idx p, idx q, std::uint64_t seed) {
    check_rank_params(k, p, a.rows, a.cols, "randomized_cur");
    if (q < 0) throw ParameterError("randomized_cur: q must be non-negative");
    const DenseMatrix g = gaussian(seed, "cur.G", k + p, a.rows);
    DenseMatrix y = multiply(g, a);
    for (idx t = 0; t < q; ++t) {
        y = multiply(multiply(y, a, false, true), a);
    }

    ColIdCore col = col_id_core(y, k);
    CurFactors out;
    out.Js = std::move(col.Js);
    const DenseMatrix c = select_columns(a, out.Js);

    ColIdCore row = col_id_core(transpose(c), static_cast<idx>(out.Js.size()));
    out.Is = std::move(row.Js);
    const DenseMatrix r = select_rows(a, out.Is);

    // U R ~ Z in least squares, solved through the transposed system.
    out.U = transpose(least_squares(transpose(r), transpose(col.Z)));
    out.cond_C = cond_number(c);
    out.cond_R = cond_number(r);
    out.warning = out.cond_C > 1e8 || out.cond_R > 1e8;
    return out;
}

} // namespace randfact
