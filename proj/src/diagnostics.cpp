#include "randfact/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "randfact/rng.hpp"
#include "randfact/sketch.hpp"

namespace randfact {

namespace {

constexpr double kE = 2.718281828459045235360287471353;
constexpr double kSqrt2OverPi = 0.79788456080286535587989211986876; // sqrt(2/pi)

double tail_frob(const std::vector<double>& sig, idx k) {
    double s = 0.0;
    for (std::size_t j = static_cast<std::size_t>(k); j < sig.size(); ++j) s += sig[j] * sig[j];
    return std::sqrt(s);
}

void validate_spectrum(const std::vector<double>& sig) {
    for (std::size_t j = 0; j < sig.size(); ++j) {
        if (!(sig[j] >= 0.0)) throw ParameterError("error_bound: spectrum must be non-negative");
        if (j > 0 && sig[j] > sig[j - 1] * (1.0 + 1e-12)) {
            throw ParameterError("error_bound: spectrum must be non-increasing");
        }
    }
}

} // namespace

double error_bound(const BoundSpec& spec) {
    const idx k = spec.k, p = spec.p, q = spec.q;
    const auto& sig = spec.singvals;
    if (k < 1) throw ParameterError("error_bound: k must be at least 1");
    if (q < 0) throw ParameterError("error_bound: q must be non-negative");
    if (k + p > static_cast<idx>(sig.size())) {
        throw ParameterError("error_bound: k + p exceeds the spectrum length");
    }
    validate_spectrum(sig);
    const double sk1 = static_cast<std::size_t>(k) < sig.size() ? sig[static_cast<std::size_t>(k)] : 0.0;
    const double kd = static_cast<double>(k);
    const double pd = static_cast<double>(p);
    switch (spec.kind) {
        case BoundKind::FrobExpectation: {
            if (p < 2) throw ParameterError("error_bound: FrobExpectation needs p >= 2");
            return std::sqrt(1.0 + kd / (pd - 1.0)) * tail_frob(sig, k);
        }
        case BoundKind::SpectralExpectation: {
            if (p < 2) throw ParameterError("error_bound: SpectralExpectation needs p >= 2");
            return (1.0 + std::sqrt(kd / (pd - 1.0))) * sk1 +
                   (kE * std::sqrt(kd + pd) / pd) * tail_frob(sig, k);
        }
        case BoundKind::PowerExpectation: {
            if (p < 2) throw ParameterError("error_bound: PowerExpectation needs p >= 2");
            const double s = 2.0 * static_cast<double>(q) + 1.0;
            double tail_pow = 0.0;
            for (std::size_t j = static_cast<std::size_t>(k); j < sig.size(); ++j) {
                tail_pow += std::pow(sig[j], 2.0 * s);
            }
            const double inner = (1.0 + std::sqrt(kd / (pd - 1.0))) * std::pow(sk1, s) +
                                 (kE * std::sqrt(kd + pd) / pd) * std::sqrt(tail_pow);
            return std::pow(inner, 1.0 / s);
        }
        case BoundKind::SpectralTail: {
            if (p < 4) throw ParameterError("error_bound: SpectralTail needs p >= 4");
            return (1.0 + 17.0 * std::sqrt(1.0 + kd / pd)) * sk1 +
                   (8.0 * std::sqrt(kd + pd) / (pd + 1.0)) * tail_frob(sig, k);
        }
    }
    throw ParameterError("error_bound: unknown bound kind");
}

double estimate_spectral_norm(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply,
    idx n, idx r, double alpha, std::uint64_t seed) {
    if (n < 1) throw ParameterError("estimate_spectral_norm: dimension must be positive");
    if (r < 1) throw ParameterError("estimate_spectral_norm: need at least one probe");
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw ParameterError("estimate_spectral_norm: alpha must lie in (0, 1)");
    }
    Rng rng = Rng::substream(seed, "specnorm");
    double worst = 0.0;
    std::vector<double> g(static_cast<std::size_t>(n));
    for (idx i = 0; i < r; ++i) {
        for (double& v : g) v = rng.normal();
        worst = std::max(worst, vec_norm(apply(g)));
    }
    return (1.0 / alpha) * kSqrt2OverPi * worst;
}

double estimate_spectral_norm(const DenseMatrix& t, idx r, double alpha, std::uint64_t seed) {
    return estimate_spectral_norm(
        [&t](const std::vector<double>& x) { return matvec(t, x); }, t.cols, r, alpha, seed);
}

double spectral_norm_power(const DenseMatrix& a, int max_iters, double tol) {
    if (a.rows == 0 || a.cols == 0) return 0.0;
    // Fixed pseudo-random start avoids starting orthogonal to the top space.
    Rng rng = Rng::substream(0x5EED, "power.v0");
    std::vector<double> v(static_cast<std::size_t>(a.cols));
    for (double& x : v) x = rng.normal();
    double nv = vec_norm(v);
    for (double& x : v) x /= nv;
    double est = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        std::vector<double> u = matvec(a, v);
        const double nu = vec_norm(u);
        if (nu == 0.0) return 0.0;
        v = matvec(a, u, true);
        const double nw = vec_norm(v);
        if (nw == 0.0) return nu;
        for (double& x : v) x /= nw;
        const double next = nw / nu; // Rayleigh quotient for ||A||
        if (it > 2 && std::fabs(next - est) <= tol * next) {
            return next;
        }
        est = next;
    }
    return est;
}

PlantedMatrix planted_matrix(idx m, idx n, const std::vector<double>& sigma, std::uint64_t seed) {
    const idx r = static_cast<idx>(sigma.size());
    if (r > std::min(m, n)) throw ParameterError("planted_matrix: spectrum longer than min(m,n)");
    DenseMatrix u = householder_qr(gaussian(seed, "testmat.u", m, r)).first;
    DenseMatrix v = householder_qr(gaussian(seed, "testmat.v", n, r)).first;
    for (idx j = 0; j < r; ++j) {
        for (idx i = 0; i < m; ++i) u(i, j) *= sigma[static_cast<std::size_t>(j)];
    }
    PlantedMatrix out;
    out.A = multiply(u, v, false, true);
    out.sigma = sigma;
    return out;
}

PlantedMatrix planted_psd_matrix(idx n, const std::vector<double>& sigma, std::uint64_t seed) {
    const idx r = static_cast<idx>(sigma.size());
    if (r > n) throw ParameterError("planted_psd_matrix: spectrum longer than n");
    for (double s : sigma) {
        if (!(s >= 0.0)) throw ParameterError("planted_psd_matrix: spectrum must be >= 0");
    }
    DenseMatrix w = householder_qr(gaussian(seed, "testmat.w", n, r)).first;
    DenseMatrix wd = w;
    for (idx j = 0; j < r; ++j) {
        for (idx i = 0; i < n; ++i) wd(i, j) *= sigma[static_cast<std::size_t>(j)];
    }
    PlantedMatrix out;
    out.A = multiply(wd, w, false, true);
    out.sigma = sigma;
    return out;
}

PlantedMatrix test_matrix(MatrixKind kind, double param, idx m, idx n, std::uint64_t seed) {
    if (m < 1 || n < 1) throw ParameterError("test_matrix: dimensions must be positive");
    const idx r = std::min(m, n);
    switch (kind) {
        case MatrixKind::FastDecay: {
            if (!(param > 0.0) || !(param < 1.0)) {
                throw ParameterError("test_matrix: FastDecay needs beta in (0, 1)");
            }
            std::vector<double> sig(static_cast<std::size_t>(r));
            double v = 1.0;
            for (idx j = 0; j < r; ++j) {
                sig[static_cast<std::size_t>(j)] = v;
                v *= param;
            }
            return planted_matrix(m, n, sig, seed);
        }
        case MatrixKind::FlatTail: {
            if (!(param > 0.0) || !(param <= 1.0)) {
                throw ParameterError("test_matrix: FlatTail needs tail level in (0, 1]");
            }
            std::vector<double> sig(static_cast<std::size_t>(r));
            double v = 1.0;
            for (idx j = 0; j < r; ++j) {
                sig[static_cast<std::size_t>(j)] = std::max(param, v);
                v *= 0.5;
            }
            return planted_matrix(m, n, sig, seed);
        }
        case MatrixKind::ExactRank: {
            const idx k = static_cast<idx>(param);
            if (k < 1 || k > r || static_cast<double>(k) != param) {
                throw ParameterError("test_matrix: ExactRank needs integer k in [1, min(m,n)]");
            }
            std::vector<double> sig(static_cast<std::size_t>(k));
            double v = 1.0;
            for (idx j = 0; j < k; ++j) {
                sig[static_cast<std::size_t>(j)] = v;
                v *= 0.8;
            }
            PlantedMatrix out = planted_matrix(m, n, sig, seed);
            out.sigma.resize(static_cast<std::size_t>(r), 0.0); // exact zeros after k
            return out;
        }
        case MatrixKind::Psd: {
            if (m != n) throw ParameterError("test_matrix: Psd requires a square shape");
            if (!(param > 0.0) || !(param <= 1.0)) {
                throw ParameterError("test_matrix: Psd needs decay in (0, 1]");
            }
            std::vector<double> sig(static_cast<std::size_t>(n));
            double v = 1.0;
            for (idx j = 0; j < n; ++j) {
                sig[static_cast<std::size_t>(j)] = v;
                v *= param;
            }
            return planted_psd_matrix(n, sig, seed);
        }
        case MatrixKind::Kahan: {
            if (m != n) throw ParameterError("test_matrix: Kahan requires a square shape");
            if (!(param > 0.0) || !(param < 1.5707963267948966)) {
                throw ParameterError("test_matrix: Kahan needs theta in (0, pi/2)");
            }
            const double c = std::cos(param);
            const double s = std::sin(param);
            PlantedMatrix out;
            out.A = DenseMatrix(n, n);
            double scale = 1.0;
            for (idx i = 0; i < n; ++i) {
                out.A(i, i) = scale;
                for (idx j = i + 1; j < n; ++j) out.A(i, j) = -c * scale;
                scale *= s;
            }
            // Standard tiny diagonal perturbation: keeps greedy pivoting at
            // the identity permutation so the under-revealing shows.
            const double eps = 2.220446049250313e-16;
            for (idx i = 0; i < n; ++i) out.A(i, i) += 25.0 * eps * static_cast<double>(n - i);
            return out; // sigma left empty: not planted analytically
        }
    }
    throw ParameterError("test_matrix: unknown kind");
}

} // namespace randfact
