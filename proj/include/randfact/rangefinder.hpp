#pragma once

#include <optional>
#include <vector>

#include "randfact/dense.hpp"

namespace randfact {

/// Shared knobs for the sampled range finders: target rank k, oversampling p
/// (the sketch has k+p columns), power passes q, and optional interleaved
/// re-orthonormalization for the power variant (which otherwise loses the
/// small singular directions to roundoff once sigma_j/sigma_1 drops below
/// eps_mach^(1/(2q+1))).
struct RangeConfig {
    idx k = 0;
    idx p = 10;
    idx q = 0;
    bool reorthonormalize = false;
    std::uint64_t seed = 0;
};

/// Orthonormal basis Q for an approximate range, optionally with the
/// projected matrix B = Q^T A and the tracked Frobenius residual
/// ||A - Q B||_F when the algorithm materializes them.
struct RangeBasis {
    DenseMatrix Q;
    std::optional<DenseMatrix> B;
    std::optional<double> residual_frob;
    /// Column indices chosen per step by greedy_lowrank's LargestColumn
    /// strategy (these coincide with column-pivoted QR's pivot order).
    /// Empty for every other algorithm.
    std::vector<idx> picks;
};

/// How the greedy builder picks its next direction from the residual A_j:
///  - LargestColumn: the residual column of largest norm (this reproduces
///    classical column-pivoted QR exactly, pivot for pivot)
///  - Random: y = A_j g with a fresh Gaussian g
///  - RandomPower: y = (A_j A_j^T)^q A_j g
///  - LocallyOptimal: the residual's top left singular vector; a test-only
///    oracle (it runs a dense SVD per step) that attains sigma_{j+1} exactly
enum class PickStrategy { LargestColumn, Random, RandomPower, LocallyOptimal };

/// Residual norm the adaptive builders test against eps.
enum class StopNorm { Frobenius, Spectral };

/// Single-sketch range finder: Q = orth(A G) with G Gaussian n x (k+p).
/// Also fills B and the residual. Requires q == 0.
RangeBasis basic_range(const DenseMatrix& a, const RangeConfig& cfg);

/// Power-iteration range finder: sample Y = (A A^T)^q A G, or the
/// re-orthonormalized interleave when cfg.reorthonormalize is set. With q = 0
/// and re-orthonormalization off this is bitwise basic_range.
RangeBasis power_range(const DenseMatrix& a, const RangeConfig& cfg);

/// Extended sampling: one sketch G but the stacked blocks
/// [A G, A^2 G, ..., A^q G] form the basis. Square inputs only; requires
/// q >= 1 and q * (k+p) <= n.
RangeBasis extended_range(const DenseMatrix& a, const RangeConfig& cfg);

/// Rank-by-rank greedy builder: repeatedly pick a direction y from the
/// residual, append q = y/||y|| and b = q^T A_j, and deflate. Stops once the
/// residual norm (Frobenius by default, tracked by down-dating; or the
/// probabilistic spectral estimate) is at most eps. q_power feeds the
/// RandomPower strategy only.
RangeBasis greedy_lowrank(const DenseMatrix& a, double eps, PickStrategy strategy,
                          std::uint64_t seed, idx q_power = 1,
                          StopNorm stop = StopNorm::Frobenius);

/// Block version: draw b Gaussian directions at a time (q power passes on the
/// current residual), complete each panel to exactly b orthonormal columns,
/// re-orthogonalize it against the accumulated basis before acceptance, and
/// deflate. The returned rank is a multiple of b (the last block may overshoot
/// the numerical rank).
RangeBasis blocked_adaptive(const DenseMatrix& a, double eps, idx b, idx q,
                            std::uint64_t seed);

/// Certified adaptive range finder: maintains r projected probe vectors and
/// stops as soon as all their norms drop below eps / (10 sqrt(2/pi)), which
/// certifies ||A - Q Q^T A||_2 <= eps except with probability
/// min(m,n) * 10^(-r). B and the residual are not materialized. Zero-norm
/// probes (degenerate draws) are replaced with fresh ones.
RangeBasis certified_range(const DenseMatrix& a, double eps, idx r, std::uint64_t seed);

/// Down-dating identity: given a = ||A||_F and B = Q^T A for orthonormal Q,
/// the residual is sqrt(a^2 - ||B||_F^2). Raises NumericalError if
/// ||B||_F > a (1 + 1e-8), which signals orthonormality loss upstream.
double frob_residual(double a_frob, const DenseMatrix& b);

} // namespace randfact
