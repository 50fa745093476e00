#pragma once

#include <complex>
#include <vector>

#include "randfact/dense.hpp"
#include "randfact/rng.hpp"

namespace randfact {

/// Description of a random embedding. Holding (kind, seed, shape) is enough
/// to regenerate the operator bit-for-bit, which is what run reports record.
struct SketchOperator {
    enum class Kind { Gaussian, Srft };
    Kind kind = Kind::Gaussian;
    std::uint64_t seed = 0;
    idx n = 0;   // input dimension (rows of the operator)
    idx ell = 0; // sample count (columns)
};

/// m x n matrix of iid standard normals drawn from the (seed, tag) substream.
DenseMatrix gaussian(std::uint64_t seed, const std::string& tag, idx m, idx n);

/// Materialize a Gaussian sketch operator (n x ell).
DenseMatrix realize_gaussian(const SketchOperator& op);

/// Unitary discrete Fourier transform (1/sqrt(n) scaling both directions, so
/// forward then inverse is the identity). Power-of-two lengths take the
/// radix-2 path; anything else falls back to the O(n^2) definition.
void unitary_dft(std::vector<std::complex<double>>& v, bool inverse);

/// Random unimodular phases and sampled coordinates of an SRFT of width ell
/// on dimension n; regeneration from (seed, n, ell) is exact.
struct SrftComponents {
    std::vector<std::complex<double>> phases; // n unimodular entries
    std::vector<idx> select;                  // ell distinct indices in [0, n)
};
SrftComponents srft_components(std::uint64_t seed, idx n, idx ell);

/// Subsampled random Fourier transform sample of A's rows: conceptually
/// Y_c = A * D * F * S with D random unimodular phases, F the unitary DFT and
/// S an ell-column coordinate selection. Returned real m x 2*ell matrix is
/// [Re(Y_c) | Im(Y_c)], whose column space contains that of Y_c.
DenseMatrix srft_sample(const DenseMatrix& a, idx ell, std::uint64_t seed);

namespace detail {
/// Test hook: optionally freeze the phases at 1 and select every coordinate
/// (requires ell == n), making the map unitary up to the real stacking.
DenseMatrix srft_sample_opts(const DenseMatrix& a, idx ell, std::uint64_t seed,
                             bool unit_phases, bool select_prefix);
} // namespace detail

} // namespace randfact
