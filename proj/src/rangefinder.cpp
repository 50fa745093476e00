#include "randfact/rangefinder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "randfact/diagnostics.hpp"
#include "randfact/rng.hpp"
#include "randfact/sketch.hpp"

namespace randfact {

namespace {

void check_sample_config(const DenseMatrix& a, const RangeConfig& cfg, const char* where) {
    if (cfg.k < 1) throw ParameterError(std::string(where) + ": k must be at least 1");
    if (cfg.p < 0) throw ParameterError(std::string(where) + ": p must be non-negative");
    if (cfg.k + cfg.p > std::min(a.rows, a.cols)) {
        throw ParameterError(std::string(where) + ": k + p exceeds min(m, n)");
    }
}

RangeBasis finish_with_projection(const DenseMatrix& a, DenseMatrix q) {
    RangeBasis out;
    out.B = multiply(q, a, true, false);
    out.residual_frob = frob_residual(frob_norm(a), *out.B);
    out.Q = std::move(q);
    return out;
}

// y <- (I - Q Q^T) y against the accumulated columns, twice for stability.
void project_out(const std::vector<std::vector<double>>& qcols, std::vector<double>& y) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : qcols) {
            double dot = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) dot += q[i] * y[i];
            for (std::size_t i = 0; i < y.size(); ++i) y[i] -= dot * q[i];
        }
    }
}

} // namespace

double frob_residual(double a_frob, const DenseMatrix& b) {
    if (!(a_frob >= 0.0)) throw ParameterError("frob_residual: norm must be non-negative");
    const double bn = frob_norm(b);
    if (bn > a_frob * (1.0 + 1e-8)) {
        throw NumericalError("frob_residual: projection exceeds the total norm; "
                             "basis orthonormality was lost upstream");
    }
    const double diff = a_frob * a_frob - bn * bn;
    return std::sqrt(std::max(0.0, diff));
}

RangeBasis basic_range(const DenseMatrix& a, const RangeConfig& cfg) {
    if (cfg.q != 0) throw ParameterError("basic_range: q must be 0 (use power_range)");
    check_sample_config(a, cfg, "basic_range");
    const DenseMatrix g = gaussian(cfg.seed, "range.G", a.cols, cfg.k + cfg.p);
    return finish_with_projection(a, orth(multiply(a, g)));
}

RangeBasis power_range(const DenseMatrix& a, const RangeConfig& cfg) {
    if (cfg.q < 0) throw ParameterError("power_range: q must be non-negative");
    check_sample_config(a, cfg, "power_range");
    const DenseMatrix g = gaussian(cfg.seed, "range.G", a.cols, cfg.k + cfg.p);
    if (!cfg.reorthonormalize) {
        DenseMatrix y = multiply(a, g);
        for (idx j = 0; j < cfg.q; ++j) {
            y = multiply(a, multiply(a, y, true, false));
        }
        return finish_with_projection(a, orth(y));
    }
    DenseMatrix q = orth(multiply(a, g));
    for (idx j = 0; j < cfg.q; ++j) {
        DenseMatrix w = orth(multiply(a, q, true, false));
        q = orth(multiply(a, w));
    }
    return finish_with_projection(a, std::move(q));
}

RangeBasis extended_range(const DenseMatrix& a, const RangeConfig& cfg) {
    if (a.rows != a.cols) throw ParameterError("extended_range: input must be square");
    if (cfg.q < 1) throw ParameterError("extended_range: q must be at least 1");
    check_sample_config(a, cfg, "extended_range");
    if (cfg.q * (cfg.k + cfg.p) > a.cols) {
        throw ParameterError("extended_range: q (k + p) exceeds the dimension");
    }
    const DenseMatrix g = gaussian(cfg.seed, "range.G", a.cols, cfg.k + cfg.p);
    DenseMatrix block = multiply(a, g);
    DenseMatrix y = block;
    for (idx j = 1; j < cfg.q; ++j) {
        block = multiply(a, block);
        y = hcat(y, block);
    }
    return finish_with_projection(a, orth(y));
}

RangeBasis greedy_lowrank(const DenseMatrix& a, double eps, PickStrategy strategy,
                          std::uint64_t seed, idx q_power, StopNorm stop) {
    if (!(eps >= 0.0)) throw ParameterError("greedy_lowrank: eps must be non-negative");
    if (q_power < 0) throw ParameterError("greedy_lowrank: q_power must be non-negative");
    const idx m = a.rows, n = a.cols;
    const double a_frob = frob_norm(a);
    const double exhausted = 1e-14 * a_frob; // numerical floor for the residual

    DenseMatrix work = a;
    std::vector<std::vector<double>> qcols;
    std::vector<std::vector<double>> brows;
    std::vector<idx> picks;
    double sum_b2 = 0.0;
    Rng rng = Rng::substream(seed, "greedy.g");

    auto residual_now = [&]() {
        const double diff = a_frob * a_frob - sum_b2;
        return std::sqrt(std::max(0.0, diff));
    };

    idx spectral_round = 0;
    auto stop_reached = [&]() {
        if (stop == StopNorm::Frobenius) return residual_now() <= eps;
        const double est = estimate_spectral_norm(
            [&work](const std::vector<double>& x) { return matvec(work, x); }, n, 10, 0.1,
            seed + 0x9E37 * static_cast<std::uint64_t>(++spectral_round));
        return est <= eps;
    };

    const idx cap = std::min(m, n);
    int redraws = 0;
    while (static_cast<idx>(qcols.size()) < cap) {
        if (stop_reached()) break;
        if (residual_now() <= exhausted) break;

        std::vector<double> y;
        idx picked = -1;
        switch (strategy) {
            case PickStrategy::LargestColumn: {
                idx best = 0;
                double best2 = -1.0;
                for (idx j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (idx i = 0; i < m; ++i) s += work(i, j) * work(i, j);
                    if (s > best2) {
                        best2 = s;
                        best = j;
                    }
                }
                y.resize(static_cast<std::size_t>(m));
                for (idx i = 0; i < m; ++i) y[static_cast<std::size_t>(i)] = work(i, best);
                picked = best;
                break;
            }
            case PickStrategy::Random:
            case PickStrategy::RandomPower: {
                std::vector<double> g(static_cast<std::size_t>(n));
                for (double& v : g) v = rng.normal();
                y = matvec(work, g);
                if (strategy == PickStrategy::RandomPower) {
                    for (idx t = 0; t < q_power; ++t) {
                        y = matvec(work, matvec(work, y, true));
                    }
                }
                break;
            }
            case PickStrategy::LocallyOptimal: {
                SvdFactors f = svd_dense(work);
                y.resize(static_cast<std::size_t>(m));
                for (idx i = 0; i < m; ++i) y[static_cast<std::size_t>(i)] = f.U(i, 0);
                break;
            }
        }

        // Mathematically y already lies in the residual's range; one cheap
        // re-projection keeps the accumulated basis orthonormal to roundoff.
        project_out(qcols, y);
        const double ny = vec_norm(y);
        if (ny <= std::max(exhausted, 1e-300)) {
            if ((strategy == PickStrategy::Random || strategy == PickStrategy::RandomPower) &&
                redraws < 8) {
                ++redraws; // degenerate draw: try a fresh probe
                continue;
            }
            break; // residual exhausted
        }
        redraws = 0;
        for (double& v : y) v /= ny;

        std::vector<double> b = matvec(work, y, true); // b = y^T A_j
        for (idx j = 0; j < n; ++j) {
            const double bj = b[static_cast<std::size_t>(j)];
            for (idx i = 0; i < m; ++i) work(i, j) -= y[static_cast<std::size_t>(i)] * bj;
        }
        sum_b2 += vec_norm(b) * vec_norm(b);
        if (std::sqrt(sum_b2) > a_frob * (1.0 + 1e-8)) {
            throw NumericalError("greedy_lowrank: orthonormality lost while down-dating");
        }
        qcols.push_back(std::move(y));
        brows.push_back(std::move(b));
        if (picked >= 0) picks.push_back(picked);
    }

    RangeBasis out;
    const idx r = static_cast<idx>(qcols.size());
    out.Q = DenseMatrix(m, r);
    for (idx j = 0; j < r; ++j) {
        for (idx i = 0; i < m; ++i) out.Q(i, j) = qcols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
    DenseMatrix b(r, n);
    for (idx i = 0; i < r; ++i) {
        for (idx j = 0; j < n; ++j) b(i, j) = brows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    out.B = std::move(b);
    out.residual_frob = residual_now();
    out.picks = std::move(picks);
    return out;
}

RangeBasis blocked_adaptive(const DenseMatrix& a, double eps, idx b, idx q,
                            std::uint64_t seed) {
    if (!(eps >= 0.0)) throw ParameterError("blocked_adaptive: eps must be non-negative");
    if (b < 1) throw ParameterError("blocked_adaptive: block size must be positive");
    if (q < 0) throw ParameterError("blocked_adaptive: q must be non-negative");
    const idx m = a.rows, n = a.cols;
    const double a_frob = frob_norm(a);
    const double exhausted = 1e-14 * a_frob;

    DenseMatrix work = a;
    DenseMatrix qacc(m, 0);
    DenseMatrix bacc(0, n);
    double sum_b2 = 0.0;
    idx block_index = 0;

    auto residual_now = [&]() {
        const double diff = a_frob * a_frob - sum_b2;
        return std::sqrt(std::max(0.0, diff));
    };

    while (residual_now() > eps && residual_now() > exhausted && qacc.cols < std::min(m, n)) {
        const idx width = std::min(b, m - qacc.cols);
        if (width < 1) break;
        const DenseMatrix g = gaussian(
            seed, "blocked.G/" + std::to_string(block_index++), n, width);
        DenseMatrix y = multiply(work, g);
        for (idx t = 0; t < q; ++t) {
            y = multiply(work, multiply(work, y, true, false));
        }
        // Panel completed to exactly `width` orthonormal columns (Householder
        // QR fills rank-deficient directions arbitrarily but orthonormally),
        // then explicitly re-orthogonalized against everything accepted so far.
        DenseMatrix qnew = householder_qr(y).first;
        if (qacc.cols > 0) {
            DenseMatrix coeff = multiply(qacc, qnew, true, false);
            qnew = subtract(qnew, multiply(qacc, coeff));
            qnew = householder_qr(qnew).first;
        }
        DenseMatrix bnew = multiply(qnew, work, true, false);
        work = subtract(work, multiply(qnew, bnew));
        const double bn = frob_norm(bnew);
        sum_b2 += bn * bn;
        if (std::sqrt(sum_b2) > a_frob * (1.0 + 1e-8)) {
            throw NumericalError("blocked_adaptive: orthonormality lost while down-dating");
        }
        qacc = hcat(qacc, qnew);
        bacc = vcat(bacc, bnew);
    }

    RangeBasis out;
    out.Q = std::move(qacc);
    out.B = std::move(bacc);
    out.residual_frob = residual_now();
    return out;
}

RangeBasis certified_range(const DenseMatrix& a, double eps, idx r, std::uint64_t seed) {
    if (!(eps > 0.0)) throw ParameterError("certified_range: eps must be positive");
    if (r < 1) throw ParameterError("certified_range: need at least one probe");
    const idx m = a.rows, n = a.cols;
    const double a_frob = frob_norm(a);
    const double tiny = std::max(1e-15 * a_frob, 1e-300);
    // All r probe norms below this threshold certify ||A - Q Q^T A|| <= eps
    // except with probability min(m, n) 10^{-r} (probe factor alpha = 1/10).
    const double threshold = eps / (10.0 * std::sqrt(2.0 / 3.14159265358979323846));

    Rng rng = Rng::substream(seed, "certified.g");
    std::vector<std::vector<double>> qcols;
    auto fresh_probe = [&]() {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (double& v : g) v = rng.normal();
        std::vector<double> y = matvec(a, g);
        project_out(qcols, y);
        return y;
    };

    std::deque<std::vector<double>> pending;
    for (idx i = 0; i < r; ++i) pending.push_back(fresh_probe());

    auto max_pending = [&]() {
        double worst = 0.0;
        for (const auto& y : pending) worst = std::max(worst, vec_norm(y));
        return worst;
    };

    while (max_pending() > threshold && static_cast<idx>(qcols.size()) < std::min(m, n)) {
        std::vector<double> y = std::move(pending.front());
        pending.pop_front();
        // Mathematically redundant full re-projection; keeps Q orthonormal.
        project_out(qcols, y);
        const double ny = vec_norm(y);
        if (ny <= tiny) {
            pending.push_back(fresh_probe()); // degenerate probe: replace it
            continue;
        }
        for (double& v : y) v /= ny;
        qcols.push_back(y);
        pending.push_back(fresh_probe());
        // Deflate the new direction out of the waiting probes.
        for (auto& p : pending) {
            double dot = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) dot += y[static_cast<std::size_t>(i)] * p[i];
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= dot * y[static_cast<std::size_t>(i)];
        }
    }

    RangeBasis out;
    const idx cols = static_cast<idx>(qcols.size());
    out.Q = DenseMatrix(m, cols);
    for (idx j = 0; j < cols; ++j) {
        for (idx i = 0; i < m; ++i) {
            out.Q(i, j) = qcols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        }
    }
    return out;
}

} // namespace randfact
