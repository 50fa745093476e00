#pragma once

#include <functional>
#include <vector>

#include "randfact/dense.hpp"

namespace randfact {

/// Which a-priori error bound to evaluate for a randomized range finder with
/// target rank k and oversampling p on a spectrum sigma_1 >= sigma_2 >= ...:
///  - FrobExpectation:    sqrt(1 + k/(p-1)) * tail_F(k)                [p >= 2]
///  - SpectralExpectation:(1 + sqrt(k/(p-1))) sigma_{k+1}
///                        + (e sqrt(k+p)/p) * tail_F(k)                [p >= 2]
///  - PowerExpectation:   same as SpectralExpectation but on the spectrum
///                        raised to the 2q+1 power, all taken to the
///                        1/(2q+1) root                                [p >= 2]
///  - SpectralTail:       (1 + 17 sqrt(1+k/p)) sigma_{k+1}
///                        + (8 sqrt(k+p)/(p+1)) * tail_F(k),
///                        exceeded with probability <= 3 e^{-p}        [p >= 4]
/// where tail_F(k) = (sum_{j>k} sigma_j^2)^{1/2}.
enum class BoundKind { FrobExpectation, SpectralExpectation, PowerExpectation, SpectralTail };

struct BoundSpec {
    BoundKind kind = BoundKind::FrobExpectation;
    idx k = 0;
    idx p = 0;
    idx q = 0;                    // only PowerExpectation reads q
    std::vector<double> singvals; // full spectrum, non-negative, non-increasing
};

/// Evaluate the bound; ParameterError if the spec violates the preconditions
/// listed above or k + p exceeds the spectrum length.
double error_bound(const BoundSpec& spec);

/// Probabilistic spectral-norm upper bound from r Gaussian probes:
/// bound = (1/alpha) sqrt(2/pi) max_i ||T g_i||, which fails (bound < ||T||)
/// with probability at most alpha^r. apply maps x (length n) to T x.
double estimate_spectral_norm(const std::function<std::vector<double>(const std::vector<double>&)>& apply,
                              idx n, idx r, double alpha, std::uint64_t seed);

/// Convenience overload probing an explicit matrix.
double estimate_spectral_norm(const DenseMatrix& t, idx r, double alpha, std::uint64_t seed);

/// Deterministic power-method spectral norm (no randomness: fixed internal
/// starting vector). Accurate for test-scale matrices; used by tests and
/// report tooling where a non-probabilistic figure is wanted.
double spectral_norm_power(const DenseMatrix& a, int max_iters = 300, double tol = 1e-11);

/// Families of synthetic matrices with a controlled spectrum:
///  - FastDecay(beta):  sigma_j = beta^(j-1)
///  - FlatTail(tail):   sigma_j = max(tail, 0.5^(j-1))
///  - ExactRank(k):     sigma_j = 0.8^(j-1) for j <= k, exactly zero after
///  - Psd(decay):       symmetric psd W diag(decay^(j-1)) W^T   [square only]
///  - Kahan(theta):     the classic triangular CPQR counterexample, with the
///                      standard tiny diagonal perturbation stabilizing the
///                      pivot order                              [square only]
enum class MatrixKind { FastDecay, FlatTail, ExactRank, Psd, Kahan };

/// A generated matrix together with its planted singular values (empty for
/// Kahan, whose spectrum is not planted analytically).
struct PlantedMatrix {
    DenseMatrix A;
    std::vector<double> sigma;
};

PlantedMatrix test_matrix(MatrixKind kind, double param, idx m, idx n, std::uint64_t seed);

/// Planted spectrum with Haar bases: A = U diag(sigma) V^T.
PlantedMatrix planted_matrix(idx m, idx n, const std::vector<double>& sigma, std::uint64_t seed);

/// Planted symmetric psd matrix W diag(sigma) W^T, sigma >= 0.
PlantedMatrix planted_psd_matrix(idx n, const std::vector<double>& sigma, std::uint64_t seed);

} // namespace randfact
