#include "randfact/fullfact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "randfact/sketch.hpp"

namespace randfact {

namespace {

void swap_columns(DenseMatrix& w, idx c1, idx c2) {
    if (c1 == c2) return;
    for (idx i = 0; i < w.rows; ++i) std::swap(w(i, c1), w(i, c2));
}

} // namespace

namespace detail {

PivotedQr hqrrp_opts(const DenseMatrix& a, idx b, idx p, std::uint64_t seed,
                     bool exact_norms) {
    if (b < 1) throw ParameterError("hqrrp: block size must be positive");
    if (p < 0) throw ParameterError("hqrrp: oversampling must be non-negative");
    const idx m = a.rows, n = a.cols, r = std::min(m, n);

    DenseMatrix w = a;
    std::vector<idx> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), idx{0});
    std::vector<ReflectorPanel> panels;
    std::vector<idx> offsets;

    idx i0 = 0, block = 0;
    while (i0 < r) {
        const idx width = std::min(b, r - i0);
        const idx ncur = n - i0;

        // Pivot selection: w pivots from a sketch of the trailing matrix
        // (or from the trailing matrix itself under the test hook).
        DenseMatrix y = exact_norms
            ? submatrix(w, i0, m, i0, n)
            : multiply(gaussian(seed, "hqrrp.G/" + std::to_string(block), b + p, m - i0),
                       submatrix(w, i0, m, i0, n));
        const PivotedQr pick = cpqr(y, CpqrStop::rank(width));

        // Move the selected columns to the panel front, bookkeeping the
        // positions so each sketch index still names its original column.
        std::vector<idx> at(static_cast<std::size_t>(ncur));
        std::iota(at.begin(), at.end(), idx{0});
        std::vector<idx> where = at;
        for (idx t = 0; t < width; ++t) {
            const idx want = pick.perm[static_cast<std::size_t>(t)];
            const idx s = where[static_cast<std::size_t>(want)];
            if (s != t) {
                swap_columns(w, i0 + t, i0 + s);
                std::swap(perm[static_cast<std::size_t>(i0 + t)],
                          perm[static_cast<std::size_t>(i0 + s)]);
                const idx o1 = at[static_cast<std::size_t>(t)];
                const idx o2 = at[static_cast<std::size_t>(s)];
                std::swap(at[static_cast<std::size_t>(t)], at[static_cast<std::size_t>(s)]);
                where[static_cast<std::size_t>(o1)] = s;
                where[static_cast<std::size_t>(o2)] = t;
            }
        }

        // Panel QR, then the compact-WY update of the trailing columns.
        DenseMatrix panel = submatrix(w, i0, m, i0, i0 + width);
        ReflectorPanel pan = panel_qr(panel);
        for (idx j = 0; j < width; ++j) {
            for (idx i = 0; i < m - i0; ++i) {
                w(i0 + i, i0 + j) = i <= j ? panel(i, j) : 0.0;
            }
        }
        if (i0 + width < n) {
            DenseMatrix trail = submatrix(w, i0, m, i0 + width, n);
            apply_panel_left(pan, trail, true);
            set_submatrix(w, i0, i0 + width, trail);
        }
        panels.push_back(std::move(pan));
        offsets.push_back(i0);
        i0 += width;
        ++block;
    }

    // Q = (product of panel reflectors) applied to the first r identity
    // columns, built by reverse application.
    DenseMatrix q(m, r);
    for (idx i = 0; i < r; ++i) q(i, i) = 1.0;
    for (std::size_t bi = panels.size(); bi-- > 0;) {
        const idx off = offsets[bi];
        DenseMatrix sub = submatrix(q, off, m, 0, r);
        apply_panel_left(panels[bi], sub, false);
        set_submatrix(q, off, 0, sub);
    }

    PivotedQr out;
    out.R = submatrix(w, 0, r, 0, n);
    for (idx j = 0; j < std::min(r, n); ++j) {
        for (idx i = j + 1; i < r; ++i) out.R(i, j) = 0.0;
    }
    // Non-negative diagonal, enforced explicitly.
    for (idx i = 0; i < r; ++i) {
        if (out.R(i, i) < 0.0) {
            for (idx j = i; j < n; ++j) out.R(i, j) = -out.R(i, j);
            for (idx t = 0; t < m; ++t) q(t, i) = -q(t, i);
        }
    }
    out.Q = std::move(q);
    out.perm = std::move(perm);
    out.stopped_rank = r;
    out.residual_frob = 0.0;
    return out;
}

} // namespace detail

PivotedQr hqrrp(const DenseMatrix& a, idx b, idx p, std::uint64_t seed) {
    return detail::hqrrp_opts(a, b, p, seed, false);
}

UtvFactors randutv(const DenseMatrix& a, idx b, idx q, std::uint64_t seed) {
    if (b < 1) throw ParameterError("randutv: block size must be positive");
    if (q < 0) throw ParameterError("randutv: q must be non-negative");
    const idx m = a.rows, n = a.cols;
    if (m < n) {
        // Wide input: factorize the transpose; the roles of U and V swap and
        // T becomes lower trapezoidal.
        UtvFactors f = randutv(transpose(a), b, q, seed);
        UtvFactors out;
        out.U = std::move(f.V);
        out.T = transpose(f.T);
        out.V = std::move(f.U);
        return out;
    }

    DenseMatrix t = a;
    DenseMatrix u = identity(m);
    DenseMatrix v = identity(n);

    idx i0 = 0, step = 0;
    while (n - i0 > b) {
        const idx mr = m - i0;

        // Right rotation from a sketch of the trailing block's row space:
        // Y = (B^T B)^q B^T G for the trailing block B.
        const DenseMatrix g =
            gaussian(seed, "randutv.G/" + std::to_string(step), mr, b);
        const DenseMatrix block = submatrix(t, i0, m, i0, n);
        DenseMatrix y = multiply(block, g, true, false);
        for (idx it = 0; it < q; ++it) {
            y = multiply(block, multiply(block, y), true, false);
        }
        ReflectorPanel vpan = panel_qr(y);
        {
            // All rows of the trailing columns rotate, including the rows of
            // already-processed blocks above the diagonal.
            DenseMatrix cols = submatrix(t, 0, m, i0, n);
            apply_panel_right(cols, vpan);
            set_submatrix(t, 0, i0, cols);
            DenseMatrix vcols = submatrix(v, 0, n, i0, n);
            apply_panel_right(vcols, vpan);
            set_submatrix(v, 0, i0, vcols);
        }

        // Left transform: panel QR of the leading b trailing columns.
        DenseMatrix panel = submatrix(t, i0, m, i0, i0 + b);
        ReflectorPanel upan = panel_qr(panel);
        for (idx j = 0; j < b; ++j) {
            for (idx i = 0; i < mr; ++i) {
                t(i0 + i, i0 + j) = i <= j ? panel(i, j) : 0.0;
            }
        }
        {
            DenseMatrix trail = submatrix(t, i0, m, i0 + b, n);
            apply_panel_left(upan, trail, true);
            set_submatrix(t, i0, i0 + b, trail);
            DenseMatrix ucols = submatrix(u, 0, m, i0, m);
            apply_panel_right(ucols, upan);
            set_submatrix(u, 0, i0, ucols);
        }

        // Diagonalize the b x b corner and push the rotations outward.
        DenseMatrix corner = submatrix(t, i0, i0 + b, i0, i0 + b);
        const SvdFactors cf = svd_dense(corner);
        {
            DenseMatrix t12 = submatrix(t, i0, i0 + b, i0 + b, n);
            t12 = multiply(cf.U, t12, true, false);
            set_submatrix(t, i0, i0 + b, t12);
        }
        if (i0 > 0) {
            DenseMatrix above = submatrix(t, 0, i0, i0, i0 + b);
            above = multiply(above, cf.V);
            set_submatrix(t, 0, i0, above);
        }
        for (idx j = 0; j < b; ++j) {
            for (idx i = 0; i < b; ++i) {
                t(i0 + i, i0 + j) = i == j ? cf.D[static_cast<std::size_t>(i)] : 0.0;
            }
        }
        {
            DenseMatrix ucols = submatrix(u, 0, m, i0, i0 + b);
            ucols = multiply(ucols, cf.U);
            set_submatrix(u, 0, i0, ucols);
            DenseMatrix vcols = submatrix(v, 0, n, i0, i0 + b);
            vcols = multiply(vcols, cf.V);
            set_submatrix(v, 0, i0, vcols);
        }
        i0 += b;
        ++step;
    }

    // Final block of width n - i0 <= b: panel QR, then the small SVD of the
    // triangular core replaces any full-height factorization.
    const idx nr = n - i0;
    if (nr > 0) {
        DenseMatrix panel = submatrix(t, i0, m, i0, n);
        ReflectorPanel fpan = panel_qr(panel);
        for (idx j = 0; j < nr; ++j) {
            for (idx i = 0; i < m - i0; ++i) {
                t(i0 + i, i0 + j) = i <= j ? panel(i, j) : 0.0;
            }
        }
        {
            DenseMatrix ucols = submatrix(u, 0, m, i0, m);
            apply_panel_right(ucols, fpan);
            set_submatrix(u, 0, i0, ucols);
        }
        DenseMatrix core = submatrix(t, i0, i0 + nr, i0, n);
        const SvdFactors cf = svd_dense(core);
        if (i0 > 0) {
            DenseMatrix above = submatrix(t, 0, i0, i0, n);
            above = multiply(above, cf.V);
            set_submatrix(t, 0, i0, above);
        }
        for (idx j = 0; j < nr; ++j) {
            for (idx i = 0; i < nr; ++i) {
                t(i0 + i, i0 + j) = i == j ? cf.D[static_cast<std::size_t>(i)] : 0.0;
            }
        }
        {
            DenseMatrix ucols = submatrix(u, 0, m, i0, i0 + nr);
            ucols = multiply(ucols, cf.U);
            set_submatrix(u, 0, i0, ucols);
            DenseMatrix vcols = submatrix(v, 0, n, i0, n);
            vcols = multiply(vcols, cf.V);
            set_submatrix(v, 0, i0, vcols);
        }
    }

    UtvFactors out;
    out.U = std::move(u);
    out.T = std::move(t);
    out.V = std::move(v);
    return out;
}

} // namespace randfact
