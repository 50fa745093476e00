#include "randfact/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace randfact {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(idx n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<std::complex<double>>& v, bool inverse) {
    const idx n = static_cast<idx>(v.size());
    // bit-reversal permutation
    for (idx i = 1, j = 0; i < n; ++i) {
        idx bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
    for (idx len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (idx i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (idx j = 0; j < len / 2; ++j) {
                const auto u = v[static_cast<std::size_t>(i + j)];
                const auto t = v[static_cast<std::size_t>(i + j + len / 2)] * w;
                v[static_cast<std::size_t>(i + j)] = u + t;
                v[static_cast<std::size_t>(i + j + len / 2)] = u - t;
                w *= wl;
            }
        }
    }
}

void dft_naive(std::vector<std::complex<double>>& v, bool inverse) {
    const idx n = static_cast<idx>(v.size());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
    const double s = inverse ? 1.0 : -1.0;
    for (idx p = 0; p < n; ++p) {
        std::complex<double> acc(0.0, 0.0);
        for (idx q = 0; q < n; ++q) {
            const double ang = s * kTwoPi * static_cast<double>((p * q) % n) / static_cast<double>(n);
            acc += v[static_cast<std::size_t>(q)] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[static_cast<std::size_t>(p)] = acc;
    }
    v = std::move(out);
}

} // namespace

DenseMatrix gaussian(std::uint64_t seed, const std::string& tag, idx m, idx n) {
    if (m < 0 || n < 0) throw ParameterError("gaussian: negative dimension");
    Rng rng = Rng::substream(seed, tag);
    DenseMatrix g(m, n);
    for (double& v : g.data) v = rng.normal();
    return g;
}

DenseMatrix realize_gaussian(const SketchOperator& op) {
    if (op.kind != SketchOperator::Kind::Gaussian) {
        throw ParameterError("realize_gaussian: operator kind is not Gaussian");
    }
    return gaussian(op.seed, "gaussian", op.n, op.ell);
}

void unitary_dft(std::vector<std::complex<double>>& v, bool inverse) {
    const idx n = static_cast<idx>(v.size());
    if (n == 0) return;
    if (is_pow2(n)) {
        fft_radix2(v, inverse);
    } else {
        dft_naive(v, inverse);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& z : v) z *= scale;
}

SrftComponents srft_components(std::uint64_t seed, idx n, idx ell) {
    if (ell < 1 || ell > n) throw ParameterError("srft_components: need 1 <= ell <= n");
    SrftComponents c;
    c.phases.resize(static_cast<std::size_t>(n));
    Rng phase_rng = Rng::substream(seed, "srft.phase");
    for (idx j = 0; j < n; ++j) {
        const double ang = kTwoPi * phase_rng.uniform01();
        c.phases[static_cast<std::size_t>(j)] = {std::cos(ang), std::sin(ang)};
    }
    // Partial Fisher-Yates: ell distinct coordinates without replacement.
    Rng sel_rng = Rng::substream(seed, "srft.select");
    std::vector<idx> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), idx{0});
    c.select.resize(static_cast<std::size_t>(ell));
    for (idx t = 0; t < ell; ++t) {
        const idx j = t + static_cast<idx>(sel_rng.below(static_cast<std::uint64_t>(n - t)));
        std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(j)]);
        c.select[static_cast<std::size_t>(t)] = pool[static_cast<std::size_t>(t)];
    }
    return c;
}

namespace detail {

DenseMatrix srft_sample_opts(const DenseMatrix& a, idx ell, std::uint64_t seed,
                             bool unit_phases, bool select_prefix) {
    const idx m = a.rows, n = a.cols;
    if (ell < 1 || ell > n) throw ParameterError("srft_sample: need 1 <= ell <= cols");
    SrftComponents c;
    if (unit_phases || select_prefix) {
        c.phases.assign(static_cast<std::size_t>(n), {1.0, 0.0});
        c.select.resize(static_cast<std::size_t>(ell));
        std::iota(c.select.begin(), c.select.end(), idx{0});
        if (!unit_phases || !select_prefix) {
            SrftComponents real = srft_components(seed, n, ell);
            if (!unit_phases) c.phases = std::move(real.phases);
            if (!select_prefix) c.select = std::move(real.select);
        }
    } else {
        c = srft_components(seed, n, ell);
    }
    DenseMatrix y(m, 2 * ell);
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    for (idx i = 0; i < m; ++i) {
        for (idx j = 0; j < n; ++j) {
            w[static_cast<std::size_t>(j)] = a(i, j) * c.phases[static_cast<std::size_t>(j)];
        }
        unitary_dft(w, false);
        for (idx t = 0; t < ell; ++t) {
            const std::complex<double> z = w[static_cast<std::size_t>(c.select[static_cast<std::size_t>(t)])];
            y(i, t) = z.real();
            y(i, ell + t) = z.imag();
        }
    }
    return y;
}

} // namespace detail

DenseMatrix srft_sample(const DenseMatrix& a, idx ell, std::uint64_t seed) {
    return detail::srft_sample_opts(a, ell, seed, false, false);
}

} // namespace randfact
