#include "randfact/dense.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

namespace randfact {

namespace {

void check_shape(idx m, idx n, const char* where) {
    if (m < 0 || n < 0) {
        throw ParameterError(std::string(where) + ": negative dimension");
    }
}

double sign_nonneg(double x) { return x < 0.0 ? -1.0 : 1.0; }

} // namespace

DenseMatrix::DenseMatrix(idx m, idx n) : rows(m), cols(n) {
    check_shape(m, n, "DenseMatrix");
    data.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(n), 0.0);
}

DenseMatrix zeros(idx m, idx n) { return DenseMatrix(m, n); }

DenseMatrix identity(idx n) {
    DenseMatrix a(n, n);
    for (idx i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
}

DenseMatrix from_data(idx m, idx n, std::vector<double> data) {
    check_shape(m, n, "from_data");
    if (data.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(n)) {
        throw ParameterError("from_data: data size does not match dimensions");
    }
    for (double v : data) {
        if (!std::isfinite(v)) throw ParameterError("from_data: non-finite entry");
    }
    DenseMatrix a;
    a.rows = m;
    a.cols = n;
    a.data = std::move(data);
    return a;
}

bool all_finite(const DenseMatrix& a) {
    for (double v : a.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (idx j = 0; j < a.cols; ++j) {
        for (idx i = 0; i < a.rows; ++i) t(j, i) = a(i, j);
    }
    return t;
}

// --- threading ---------------------------------------------------------

namespace {

std::atomic<int> g_max_threads{0};

int detect_threads() {
    if (const char* env = std::getenv("RANDFACT_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return std::min(v, 64);
    }
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<int>(std::min<unsigned>(hw, 8));
}

} // namespace

void set_max_threads(int n) { g_max_threads.store(n < 1 ? 1 : n); }

int max_threads() {
    int v = g_max_threads.load();
    if (v == 0) {
        v = detect_threads();
        g_max_threads.store(v);
    }
    return v;
}

// --- multiply -----------------------------------------------------------

namespace {

// Each kernel computes output columns [j0, j1); accumulation order per entry
// is fixed regardless of how columns are partitioned across threads.
void kernel_nn(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b, idx j0, idx j1) {
    const idx m = a.rows, kk = a.cols;
    for (idx j = j0; j < j1; ++j) {
        double* cj = c.data.data() + j * m;
        for (idx l = 0; l < kk; ++l) {
            const double blj = b(l, j);
            if (blj == 0.0) continue;
            const double* al = a.data.data() + l * m;
            for (idx i = 0; i < m; ++i) cj[i] += blj * al[i];
        }
    }
}

void kernel_tn(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b, idx j0, idx j1) {
    const idx m = a.cols, kk = a.rows;
    for (idx j = j0; j < j1; ++j) {
        const double* bj = b.data.data() + j * kk;
        for (idx i = 0; i < m; ++i) {
            const double* ai = a.data.data() + i * kk;
            double s = 0.0;
            for (idx l = 0; l < kk; ++l) s += ai[l] * bj[l];
            c(i, j) = s;
        }
    }
}

void kernel_nt(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b, idx j0, idx j1) {
    const idx m = a.rows, kk = a.cols;
    for (idx l = 0; l < kk; ++l) {
        const double* al = a.data.data() + l * m;
        for (idx j = j0; j < j1; ++j) {
            const double bjl = b(j, l);
            if (bjl == 0.0) continue;
            double* cj = c.data.data() + j * m;
            for (idx i = 0; i < m; ++i) cj[i] += bjl * al[i];
        }
    }
}

void kernel_tt(DenseMatrix& c, const DenseMatrix& a, const DenseMatrix& b, idx j0, idx j1) {
    const idx m = a.cols, kk = a.rows;
    for (idx j = j0; j < j1; ++j) {
        for (idx i = 0; i < m; ++i) {
            const double* ai = a.data.data() + i * kk;
            double s = 0.0;
            for (idx l = 0; l < kk; ++l) s += ai[l] * b(j, l);
            c(i, j) = s;
        }
    }
}

} // namespace

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b, bool trans_a, bool trans_b) {
    const idx am = trans_a ? a.cols : a.rows;
    const idx ak = trans_a ? a.rows : a.cols;
    const idx bk = trans_b ? b.cols : b.rows;
    const idx bn = trans_b ? b.rows : b.cols;
    if (ak != bk) throw ParameterError("multiply: inner dimensions disagree");
    DenseMatrix c(am, bn);
    if (am == 0 || bn == 0 || ak == 0) return c;

    auto run = [&](idx j0, idx j1) {
        if (!trans_a && !trans_b) kernel_nn(c, a, b, j0, j1);
        else if (trans_a && !trans_b) kernel_tn(c, a, b, j0, j1);
        else if (!trans_a && trans_b) kernel_nt(c, a, b, j0, j1);
        else kernel_tt(c, a, b, j0, j1);
    };

    const double flops = 2.0 * double(am) * double(bn) * double(ak);
    int nt = max_threads();
    if (nt > 1 && flops > 4.0e6 && bn >= 2 * nt) {
        nt = std::min<idx>(nt, bn);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nt));
        for (int t = 0; t < nt; ++t) {
            const idx j0 = bn * t / nt;
            const idx j1 = bn * (t + 1) / nt;
            pool.emplace_back(run, j0, j1);
        }
        for (auto& th : pool) th.join();
    } else {
        run(0, bn);
    }
    return c;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ParameterError("add: shape mismatch");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ParameterError("subtract: shape mismatch");
    DenseMatrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

DenseMatrix scaled(const DenseMatrix& a, double s) {
    DenseMatrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

std::vector<double> matvec(const DenseMatrix& a, const std::vector<double>& x, bool trans) {
    const idx m = trans ? a.cols : a.rows;
    const idx n = trans ? a.rows : a.cols;
    if (static_cast<idx>(x.size()) != n) throw ParameterError("matvec: length mismatch");
    std::vector<double> y(static_cast<std::size_t>(m), 0.0);
    if (!trans) {
        for (idx j = 0; j < n; ++j) {
            const double xj = x[static_cast<std::size_t>(j)];
            if (xj == 0.0) continue;
            const double* aj = a.data.data() + j * a.rows;
            for (idx i = 0; i < m; ++i) y[static_cast<std::size_t>(i)] += xj * aj[i];
        }
    } else {
        for (idx i = 0; i < m; ++i) {
            const double* ai = a.data.data() + i * a.rows;
            double s = 0.0;
            for (idx l = 0; l < n; ++l) s += ai[l] * x[static_cast<std::size_t>(l)];
            y[static_cast<std::size_t>(i)] = s;
        }
    }
    return y;
}

double frob_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s = std::max(s, std::fabs(v));
    return s;
}

double vec_norm(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

DenseMatrix submatrix(const DenseMatrix& a, idx r0, idx r1, idx c0, idx c1) {
    if (r0 < 0 || r1 > a.rows || c0 < 0 || c1 > a.cols || r0 > r1 || c0 > c1) {
        throw ParameterError("submatrix: range out of bounds");
    }
    DenseMatrix s(r1 - r0, c1 - c0);
    for (idx j = c0; j < c1; ++j) {
        for (idx i = r0; i < r1; ++i) s(i - r0, j - c0) = a(i, j);
    }
    return s;
}

DenseMatrix select_columns(const DenseMatrix& a, const std::vector<idx>& cols) {
    DenseMatrix s(a.rows, static_cast<idx>(cols.size()));
    for (idx j = 0; j < s.cols; ++j) {
        const idx src = cols[static_cast<std::size_t>(j)];
        if (src < 0 || src >= a.cols) throw ParameterError("select_columns: index out of bounds");
        for (idx i = 0; i < a.rows; ++i) s(i, j) = a(i, src);
    }
    return s;
}

DenseMatrix select_rows(const DenseMatrix& a, const std::vector<idx>& rows) {
    DenseMatrix s(static_cast<idx>(rows.size()), a.cols);
    for (idx i = 0; i < s.rows; ++i) {
        const idx src = rows[static_cast<std::size_t>(i)];
        if (src < 0 || src >= a.rows) throw ParameterError("select_rows: index out of bounds");
        for (idx j = 0; j < a.cols; ++j) s(i, j) = a(src, j);
    }
    return s;
}

void set_submatrix(DenseMatrix& a, idx r0, idx c0, const DenseMatrix& b) {
    if (r0 < 0 || c0 < 0 || r0 + b.rows > a.rows || c0 + b.cols > a.cols) {
        throw ParameterError("set_submatrix: block does not fit");
    }
    for (idx j = 0; j < b.cols; ++j) {
        for (idx i = 0; i < b.rows; ++i) a(r0 + i, c0 + j) = b(i, j);
    }
}

DenseMatrix hcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols == 0) {
        if (a.rows != 0 && b.cols != 0 && a.rows != b.rows) {
            throw ParameterError("hcat: row mismatch");
        }
        return b;
    }
    if (b.cols == 0) return a;
    if (a.rows != b.rows) throw ParameterError("hcat: row mismatch");
    DenseMatrix c(a.rows, a.cols + b.cols);
    set_submatrix(c, 0, 0, a);
    set_submatrix(c, 0, a.cols, b);
    return c;
}

DenseMatrix vcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows == 0) return b;
    if (b.rows == 0) return a;
    if (a.cols != b.cols) throw ParameterError("vcat: column mismatch");
    DenseMatrix c(a.rows + b.rows, a.cols);
    set_submatrix(c, 0, 0, a);
    set_submatrix(c, a.rows, 0, b);
    return c;
}

// --- Householder machinery ----------------------------------------------

namespace {

// Reflector for x (length L >= 1): returns (v tail, beta, result) with v[0]
// implicitly 1 so that (I - beta v v^T) x = result * e_1, result >= 0 always;
// the R diagonal is therefore non-negative by construction.
struct Reflector {
    std::vector<double> tail; // v[1..L)
    double beta = 0.0;
    double result = 0.0;
};

Reflector make_reflector(const double* x, idx len) {
    Reflector h;
    h.tail.assign(static_cast<std::size_t>(len > 0 ? len - 1 : 0), 0.0);
    if (len == 0) return h;
    const double alpha = x[0];
    double sigma = 0.0;
    for (idx i = 1; i < len; ++i) sigma += x[i] * x[i];
    if (sigma == 0.0) {
        if (alpha >= 0.0) {
            h.beta = 0.0;
            h.result = alpha;
        } else {
            h.beta = 2.0;
            h.result = -alpha;
        }
        return h;
    }
    const double mu = std::sqrt(alpha * alpha + sigma);
    double v0;
    if (alpha <= 0.0) {
        v0 = alpha - mu;
    } else {
        v0 = -sigma / (alpha + mu);
    }
    h.beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
    for (idx i = 1; i < len; ++i) h.tail[static_cast<std::size_t>(i - 1)] = x[i] / v0;
    h.result = mu;
    return h;
}

// Apply (I - beta v v^T) to columns [c0, c1) of W, restricted to rows
// [r0, r0+len); v[0] = 1, tail holds v[1..len).
void apply_reflector(DenseMatrix& w, idx r0, idx len, idx c0, idx c1,
                     const std::vector<double>& tail, double beta) {
    if (beta == 0.0) return;
    for (idx j = c0; j < c1; ++j) {
        double* col = w.data.data() + j * w.rows + r0;
        double dot = col[0];
        for (idx i = 1; i < len; ++i) dot += tail[static_cast<std::size_t>(i - 1)] * col[i];
        const double bd = beta * dot;
        col[0] -= bd;
        for (idx i = 1; i < len; ++i) col[i] -= bd * tail[static_cast<std::size_t>(i - 1)];
    }
}

} // namespace

std::pair<DenseMatrix, DenseMatrix> householder_qr(const DenseMatrix& a) {
    const idx m = a.rows, n = a.cols;
    const idx r = std::min(m, n);
    DenseMatrix w = a;
    std::vector<Reflector> hs;
    hs.reserve(static_cast<std::size_t>(r));
    for (idx j = 0; j < r; ++j) {
        Reflector h = make_reflector(w.data.data() + j * m + j, m - j);
        apply_reflector(w, j, m - j, j + 1, n, h.tail, h.beta);
        w(j, j) = h.result;
        for (idx i = j + 1; i < m; ++i) w(i, j) = 0.0;
        hs.push_back(std::move(h));
    }
    DenseMatrix rr(r, n);
    for (idx j = 0; j < n; ++j) {
        for (idx i = 0; i <= std::min(j, r - 1); ++i) rr(i, j) = w(i, j);
    }
    // Q = H_1 ... H_r applied to the first r identity columns, in reverse.
    DenseMatrix q(m, r);
    for (idx i = 0; i < r; ++i) q(i, i) = 1.0;
    for (idx j = r - 1; j >= 0; --j) {
        apply_reflector(q, j, m - j, 0, r, hs[static_cast<std::size_t>(j)].tail,
                        hs[static_cast<std::size_t>(j)].beta);
    }
    return {std::move(q), std::move(rr)};
}

DenseMatrix orth(const DenseMatrix& x) {
    const idx m = x.rows, n = x.cols;
    const double drop = 1e-13 * frob_norm(x);
    DenseMatrix q(m, 0);
    std::vector<double> cols;
    cols.reserve(static_cast<std::size_t>(m * n));
    idx r = 0;
    std::vector<double> v(static_cast<std::size_t>(m));
    for (idx j = 0; j < n; ++j) {
        for (idx i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = x(i, j);
        // Two Gram-Schmidt passes keep ||Q^T Q - I|| at roundoff.
        for (int pass = 0; pass < 2; ++pass) {
            for (idx c = 0; c < r; ++c) {
                const double* qc = cols.data() + c * m;
                double dot = 0.0;
                for (idx i = 0; i < m; ++i) dot += qc[i] * v[static_cast<std::size_t>(i)];
                for (idx i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] -= dot * qc[i];
            }
        }
        const double nrm = vec_norm(v);
        if (nrm > drop && nrm > 0.0) {
            for (idx i = 0; i < m; ++i) cols.push_back(v[static_cast<std::size_t>(i)] / nrm);
            ++r;
        }
    }
    q.rows = m;
    q.cols = r;
    q.data = std::move(cols);
    return q;
}

CpqrStop CpqrStop::rank(idx k) {
    CpqrStop s;
    s.mode = Mode::Rank;
    s.k = k;
    return s;
}

CpqrStop CpqrStop::tolerance(double eps) {
    CpqrStop s;
    s.mode = Mode::Tolerance;
    s.eps = eps;
    return s;
}

CpqrStop CpqrStop::full() {
    CpqrStop s;
    s.mode = Mode::Full;
    return s;
}

PivotedQr cpqr(const DenseMatrix& a, const CpqrStop& stop) {
    const idx m = a.rows, n = a.cols;
    if (stop.mode == CpqrStop::Mode::Rank && (stop.k < 0 || stop.k > std::min(m, n))) {
        throw ParameterError("cpqr: rank target out of range");
    }
    if (stop.mode == CpqrStop::Mode::Tolerance && !(stop.eps >= 0.0)) {
        throw ParameterError("cpqr: tolerance must be non-negative");
    }
    DenseMatrix w = a;
    std::vector<idx> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), idx{0});
    std::vector<double> norms2(static_cast<std::size_t>(n), 0.0);
    std::vector<double> norms2_orig(static_cast<std::size_t>(n), 0.0);
    for (idx j = 0; j < n; ++j) {
        double s = 0.0;
        for (idx i = 0; i < m; ++i) s += w(i, j) * w(i, j);
        norms2[static_cast<std::size_t>(j)] = s;
        norms2_orig[static_cast<std::size_t>(j)] = s;
    }
    const double a_frob = frob_norm(a);
    const double halt = 1e-14 * a_frob; // remaining columns below this are noise
    const idx rmax = std::min(m, n);
    std::vector<Reflector> hs;
    hs.reserve(static_cast<std::size_t>(rmax));

    idx r = 0;
    auto residual2 = [&](idx from) {
        double s = 0.0;
        for (idx c = from; c < n; ++c) s += std::max(0.0, norms2[static_cast<std::size_t>(c)]);
        return s;
    };

    while (r < rmax) {
        if (stop.mode == CpqrStop::Mode::Rank && r >= stop.k) break;
        if (stop.mode == CpqrStop::Mode::Tolerance &&
            std::sqrt(residual2(r)) <= stop.eps) {
            break;
        }
        // Greedy pivot: first column attaining the largest down-dated norm.
        idx piv = r;
        double best = -1.0;
        for (idx c = r; c < n; ++c) {
            const double v = norms2[static_cast<std::size_t>(c)];
            if (v > best) {
                best = v;
                piv = c;
            }
        }
        // Down-dating can lose accuracy; recompute exactly when the winner
        // has shrunk far below its original size.
        if (best <= 0.0 || best < 1e-8 * norms2_orig[static_cast<std::size_t>(piv)]) {
            for (idx c = r; c < n; ++c) {
                double s = 0.0;
                for (idx i = r; i < m; ++i) s += w(i, c) * w(i, c);
                norms2[static_cast<std::size_t>(c)] = s;
            }
            piv = r;
            best = -1.0;
            for (idx c = r; c < n; ++c) {
                const double v = norms2[static_cast<std::size_t>(c)];
                if (v > best) {
                    best = v;
                    piv = c;
                }
            }
        }
        if (std::sqrt(std::max(0.0, best)) < halt) break; // numerically exhausted
        if (piv != r) {
            for (idx i = 0; i < m; ++i) std::swap(w(i, r), w(i, piv));
            std::swap(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(piv)]);
            std::swap(norms2[static_cast<std::size_t>(r)], norms2[static_cast<std::size_t>(piv)]);
            std::swap(norms2_orig[static_cast<std::size_t>(r)], norms2_orig[static_cast<std::size_t>(piv)]);
        }
        Reflector h = make_reflector(w.data.data() + r * m + r, m - r);
        apply_reflector(w, r, m - r, r + 1, n, h.tail, h.beta);
        w(r, r) = h.result;
        for (idx i = r + 1; i < m; ++i) w(i, r) = 0.0;
        hs.push_back(std::move(h));
        for (idx c = r + 1; c < n; ++c) {
            norms2[static_cast<std::size_t>(c)] -= w(r, c) * w(r, c);
        }
        ++r;
    }

    PivotedQr out;
    out.stopped_rank = r;
    out.residual_frob = std::sqrt(residual2(r));
    out.perm = std::move(perm);
    out.R = DenseMatrix(r, n);
    for (idx j = 0; j < n; ++j) {
        for (idx i = 0; i < std::min(r, j + 1); ++i) out.R(i, j) = w(i, j);
    }
    out.Q = DenseMatrix(m, r);
    for (idx i = 0; i < r; ++i) out.Q(i, i) = 1.0;
    for (idx j = r - 1; j >= 0; --j) {
        apply_reflector(out.Q, j, m - j, 0, r, hs[static_cast<std::size_t>(j)].tail,
                        hs[static_cast<std::size_t>(j)].beta);
    }
    return out;
}

// --- one-sided Jacobi SVD -------------------------------------------------

namespace {

// Deterministic greedy orthonormal completion used for zero singular columns.
void fill_orthonormal_completion(DenseMatrix& u, idx have, idx want) {
    const idx m = u.rows;
    for (idx next = have; next < want; ++next) {
        double best_norm = -1.0;
        std::vector<double> best;
        std::vector<double> v(static_cast<std::size_t>(m));
        for (idx cand = 0; cand < m; ++cand) {
            std::fill(v.begin(), v.end(), 0.0);
            v[static_cast<std::size_t>(cand)] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (idx c = 0; c < next; ++c) {
                    double dot = 0.0;
                    for (idx i = 0; i < m; ++i) dot += u(i, c) * v[static_cast<std::size_t>(i)];
                    for (idx i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] -= dot * u(i, c);
                }
            }
            const double nrm = vec_norm(v);
            if (nrm > best_norm) {
                best_norm = nrm;
                best = v;
            }
        }
        for (idx i = 0; i < m; ++i) u(i, next) = best[static_cast<std::size_t>(i)] / best_norm;
    }
}

SvdFactors svd_tall(const DenseMatrix& a) {
    const idx m = a.rows, n = a.cols;
    DenseMatrix w = a;
    DenseMatrix v = identity(n);
    const double tol = 1e-15;
    bool converged = (n <= 1);
    for (int sweep = 0; sweep < 60 && !converged; ++sweep) {
        // Order columns by descending norm before each sweep. Plain cyclic
        // sweeps resolve a graded spectrum one scale level at a time (~2
        // sweeps per decade, so a spectrum spanning 1e-23 blows past any
        // fixed cap); with the ordering, every representable grading
        // converges in at most ~21 sweeps.
        {
            std::vector<double> nrm(static_cast<std::size_t>(n));
            for (idx j = 0; j < n; ++j) {
                double s = 0.0;
                const double* wj = w.data.data() + j * m;
                for (idx i = 0; i < m; ++i) s += wj[i] * wj[i];
                nrm[static_cast<std::size_t>(j)] = s;
            }
            std::vector<idx> ord(static_cast<std::size_t>(n));
            std::iota(ord.begin(), ord.end(), idx{0});
            std::stable_sort(ord.begin(), ord.end(), [&](idx x, idx y) {
                return nrm[static_cast<std::size_t>(x)] > nrm[static_cast<std::size_t>(y)];
            });
            DenseMatrix w2(m, n), v2(n, n);
            for (idx j = 0; j < n; ++j) {
                const idx src = ord[static_cast<std::size_t>(j)];
                for (idx i = 0; i < m; ++i) w2(i, j) = w(i, src);
                for (idx i = 0; i < n; ++i) v2(i, j) = v(i, src);
            }
            w = std::move(w2);
            v = std::move(v2);
        }
        converged = true;
        for (idx p = 0; p + 1 < n; ++p) {
            for (idx q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                double* wp = w.data.data() + p * m;
                double* wq = w.data.data() + q * m;
                for (idx i = 0; i < m; ++i) {
                    app += wp[i] * wp[i];
                    aqq += wq[i] * wq[i];
                    apq += wp[i] * wq[i];
                }
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
                converged = false;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = sign_nonneg(zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (idx i = 0; i < m; ++i) {
                    const double xp = wp[i], xq = wq[i];
                    wp[i] = cs * xp - sn * xq;
                    wq[i] = sn * xp + cs * xq;
                }
                double* vp = v.data.data() + p * n;
                double* vq = v.data.data() + q * n;
                for (idx i = 0; i < n; ++i) {
                    const double xp = vp[i], xq = vq[i];
                    vp[i] = cs * xp - sn * xq;
                    vq[i] = sn * xp + cs * xq;
                }
            }
        }
    }
    if (!converged) throw ConvergenceError("svd_dense: Jacobi sweeps did not converge");

    std::vector<double> sig(static_cast<std::size_t>(n));
    for (idx j = 0; j < n; ++j) {
        double s = 0.0;
        for (idx i = 0; i < m; ++i) s += w(i, j) * w(i, j);
        sig[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    std::vector<idx> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), idx{0});
    std::stable_sort(order.begin(), order.end(), [&](idx x, idx y) {
        return sig[static_cast<std::size_t>(x)] > sig[static_cast<std::size_t>(y)];
    });

    SvdFactors f;
    f.D.resize(static_cast<std::size_t>(n));
    f.U = DenseMatrix(m, n);
    f.V = DenseMatrix(n, n);
    const double smax = sig[static_cast<std::size_t>(order[0])];
    idx filled = 0;
    for (idx j = 0; j < n; ++j) {
        const idx src = order[static_cast<std::size_t>(j)];
        const double s = sig[static_cast<std::size_t>(src)];
        f.D[static_cast<std::size_t>(j)] = s;
        for (idx i = 0; i < n; ++i) f.V(i, j) = v(i, src);
        if (s > 0.0 && s > smax * 1e-250) {
            for (idx i = 0; i < m; ++i) f.U(i, j) = w(i, src) / s;
            filled = j + 1;
        } else {
            f.D[static_cast<std::size_t>(j)] = 0.0;
        }
    }
    if (filled < n) fill_orthonormal_completion(f.U, filled, n);
    return f;
}

} // namespace

SvdFactors svd_dense(const DenseMatrix& a) {
    if (a.rows == 0 || a.cols == 0) {
        SvdFactors f;
        f.U = DenseMatrix(a.rows, 0);
        f.V = DenseMatrix(a.cols, 0);
        return f;
    }
    if (a.rows >= a.cols) return svd_tall(a);
    SvdFactors f = svd_tall(transpose(a));
    std::swap(f.U, f.V);
    return f;
}

std::pair<DenseMatrix, std::vector<double>> eig_sym(const DenseMatrix& a) {
    if (a.rows != a.cols) throw ParameterError("eig_sym: matrix must be square");
    const idx n = a.rows;
    DenseMatrix s(n, n);
    for (idx j = 0; j < n; ++j) {
        for (idx i = 0; i < n; ++i) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    }
    DenseMatrix v = identity(n);
    const double scale = frob_norm(s);
    bool converged = (n <= 1) || scale == 0.0;
    for (int sweep = 0; sweep < 30 && !converged; ++sweep) {
        converged = true;
        for (idx p = 0; p + 1 < n; ++p) {
            for (idx q = p + 1; q < n; ++q) {
                const double spq = s(p, q);
                if (std::fabs(spq) <= 1e-15 * scale) continue;
                converged = false;
                const double tau = (s(q, q) - s(p, p)) / (2.0 * spq);
                const double t = sign_nonneg(tau) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                // S <- J^T S J with J rotating columns (p, q).
                for (idx i = 0; i < n; ++i) {
                    const double xp = s(i, p), xq = s(i, q);
                    s(i, p) = c * xp - sn * xq;
                    s(i, q) = sn * xp + c * xq;
                }
                for (idx i = 0; i < n; ++i) {
                    const double xp = s(p, i), xq = s(q, i);
                    s(p, i) = c * xp - sn * xq;
                    s(q, i) = sn * xp + c * xq;
                }
                s(p, q) = 0.0;
                s(q, p) = 0.0;
                for (idx i = 0; i < n; ++i) {
                    const double xp = v(i, p), xq = v(i, q);
                    v(i, p) = c * xp - sn * xq;
                    v(i, q) = sn * xp + c * xq;
                }
            }
        }
    }
    if (!converged) throw ConvergenceError("eig_sym: Jacobi sweeps did not converge");
    std::vector<double> lam(static_cast<std::size_t>(n));
    for (idx i = 0; i < n; ++i) lam[static_cast<std::size_t>(i)] = s(i, i);
    std::vector<idx> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), idx{0});
    std::stable_sort(order.begin(), order.end(), [&](idx x, idx y) {
        return std::fabs(lam[static_cast<std::size_t>(x)]) > std::fabs(lam[static_cast<std::size_t>(y)]);
    });
    DenseMatrix u(n, n);
    std::vector<double> lam_sorted(static_cast<std::size_t>(n));
    for (idx j = 0; j < n; ++j) {
        const idx src = order[static_cast<std::size_t>(j)];
        lam_sorted[static_cast<std::size_t>(j)] = lam[static_cast<std::size_t>(src)];
        for (idx i = 0; i < n; ++i) u(i, j) = v(i, src);
    }
    return {std::move(u), std::move(lam_sorted)};
}

DenseMatrix cholesky(const DenseMatrix& b) {
    if (b.rows != b.cols) throw ParameterError("cholesky: matrix must be square");
    const idx n = b.rows;
    double max_diag = 0.0;
    for (idx j = 0; j < n; ++j) max_diag = std::max(max_diag, std::fabs(b(j, j)));
    const double floor = 1e-14 * max_diag;
    DenseMatrix c(n, n);
    for (idx j = 0; j < n; ++j) {
        double d = b(j, j);
        for (idx i = 0; i < j; ++i) d -= c(i, j) * c(i, j);
        if (d <= floor || !(d > 0.0)) {
            throw NotPositiveDefiniteError("cholesky: pivot not positive at column " +
                                           std::to_string(j));
        }
        const double cjj = std::sqrt(d);
        c(j, j) = cjj;
        for (idx col = j + 1; col < n; ++col) {
            double s = b(j, col); // upper triangle of B is the one consulted
            for (idx i = 0; i < j; ++i) s -= c(i, j) * c(i, col);
            c(j, col) = s / cjj;
        }
    }
    return c;
}

DenseMatrix solve_upper(const DenseMatrix& r, const DenseMatrix& b) {
    if (r.rows != r.cols) throw ParameterError("solve_upper: factor must be square");
    if (r.rows != b.rows) throw ParameterError("solve_upper: shape mismatch");
    const idx n = r.rows;
    for (idx i = 0; i < n; ++i) {
        if (r(i, i) == 0.0) throw NumericalError("solve_upper: singular triangular factor");
    }
    DenseMatrix x = b;
    for (idx col = 0; col < b.cols; ++col) {
        for (idx i = n - 1; i >= 0; --i) {
            double s = x(i, col);
            for (idx j = i + 1; j < n; ++j) s -= r(i, j) * x(j, col);
            x(i, col) = s / r(i, i);
        }
    }
    return x;
}

DenseMatrix solve_upper_right(const DenseMatrix& b, const DenseMatrix& r) {
    if (r.rows != r.cols) throw ParameterError("solve_upper_right: factor must be square");
    if (r.rows != b.cols) throw ParameterError("solve_upper_right: shape mismatch");
    const idx n = r.rows;
    for (idx i = 0; i < n; ++i) {
        if (r(i, i) == 0.0) throw NumericalError("solve_upper_right: singular triangular factor");
    }
    // X R = B, solved column by column of X in increasing order.
    DenseMatrix x = b;
    for (idx j = 0; j < n; ++j) {
        for (idx i = 0; i < b.rows; ++i) {
            double s = x(i, j);
            for (idx l = 0; l < j; ++l) s -= x(i, l) * r(l, j);
            x(i, j) = s / r(j, j);
        }
    }
    return x;
}

DenseMatrix least_squares(const DenseMatrix& m, const DenseMatrix& b) {
    if (m.rows != b.rows) throw ParameterError("least_squares: shape mismatch");
    SvdFactors f = svd_dense(m);
    const idx r = static_cast<idx>(f.D.size());
    const double cutoff = (r > 0 ? f.D[0] : 0.0) * 1e-12;
    DenseMatrix ub = multiply(f.U, b, true, false); // r x k
    for (idx i = 0; i < r; ++i) {
        const double d = f.D[static_cast<std::size_t>(i)];
        const double inv = (d > cutoff && d > 0.0) ? 1.0 / d : 0.0;
        for (idx j = 0; j < ub.cols; ++j) ub(i, j) *= inv;
    }
    return multiply(f.V, ub);
}

DenseMatrix pseudoinverse(const DenseMatrix& m) {
    SvdFactors f = svd_dense(m);
    const idx r = static_cast<idx>(f.D.size());
    const double cutoff = (r > 0 ? f.D[0] : 0.0) * 1e-12;
    DenseMatrix vt(f.V.cols, f.V.rows);
    for (idx j = 0; j < f.V.cols; ++j) {
        const double d = f.D[static_cast<std::size_t>(j)];
        const double inv = (d > cutoff && d > 0.0) ? 1.0 / d : 0.0;
        for (idx i = 0; i < f.V.rows; ++i) vt(j, i) = f.V(i, j) * inv;
    }
    return multiply(vt, f.U, true, true); // (diag+ V^T)^T U^T = V diag+ U^T
}

// --- compact-WY panels ----------------------------------------------------

ReflectorPanel panel_qr(DenseMatrix& p) {
    const idx m = p.rows, w = p.cols;
    if (w > m) throw ParameterError("panel_qr: panel wider than tall");
    ReflectorPanel panel;
    panel.V = DenseMatrix(m, w);
    panel.beta.assign(static_cast<std::size_t>(w), 0.0);
    panel.T = DenseMatrix(w, w);
    for (idx j = 0; j < w; ++j) {
        Reflector h = make_reflector(p.data.data() + j * m + j, m - j);
        apply_reflector(p, j, m - j, j + 1, w, h.tail, h.beta);
        p(j, j) = h.result;
        for (idx i = j + 1; i < m; ++i) p(i, j) = 0.0;
        panel.V(j, j) = 1.0;
        for (idx i = j + 1; i < m; ++i) {
            panel.V(i, j) = h.tail[static_cast<std::size_t>(i - j - 1)];
        }
        panel.beta[static_cast<std::size_t>(j)] = h.beta;
        // T(0:j, j) = -beta_j * T(0:j, 0:j) * (V(:, 0:j)^T v_j)
        for (idx c = 0; c < j; ++c) {
            double dot = 0.0;
            for (idx i = j; i < m; ++i) dot += panel.V(i, c) * panel.V(i, j);
            panel.T(c, j) = dot;
        }
        for (idx row = 0; row < j; ++row) {
            double s = 0.0;
            for (idx c = row; c < j; ++c) s += panel.T(row, c) * panel.T(c, j);
            panel.T(row, j) = -h.beta * s;
        }
        panel.T(j, j) = h.beta;
    }
    return panel;
}

void apply_panel_left(const ReflectorPanel& panel, DenseMatrix& c, bool trans) {
    if (panel.V.cols == 0) return;
    if (panel.V.rows != c.rows) throw ParameterError("apply_panel_left: shape mismatch");
    DenseMatrix w1 = multiply(panel.V, c, true, false);         // w x k
    DenseMatrix w2 = trans ? multiply(panel.T, w1, true, false) // T^T W1
                           : multiply(panel.T, w1);             // T W1
    DenseMatrix upd = multiply(panel.V, w2);
    c = subtract(c, upd);
}

void apply_panel_right(DenseMatrix& c, const ReflectorPanel& panel) {
    if (panel.V.cols == 0) return;
    if (panel.V.rows != c.cols) throw ParameterError("apply_panel_right: shape mismatch");
    DenseMatrix w1 = multiply(c, panel.V);        // k x w
    DenseMatrix w2 = multiply(w1, panel.T);       // k x w
    DenseMatrix upd = multiply(w2, panel.V, false, true);
    c = subtract(c, upd);
}

DenseMatrix complete_orthonormal(const DenseMatrix& q, idx m) {
    if (q.rows != m) throw ParameterError("complete_orthonormal: row mismatch");
    if (q.cols > m) throw ParameterError("complete_orthonormal: too many columns");
    DenseMatrix full(m, m);
    set_submatrix(full, 0, 0, q);
    fill_orthonormal_completion(full, q.cols, m);
    return full;
}

} // namespace randfact
