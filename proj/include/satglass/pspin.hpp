#pragma once

#include <cstdint>
#include <vector>

#include "satglass/ksat.hpp"  // Assignment, CapacityError

namespace satglass {

/// Mixture coefficients c_p = binom(K,p), p = 1..K, so that
/// xi(x) = sum_p c_p x^p = (1+x)^K - 1.
struct MixtureSpec {
    int K = 0;
    std::vector<double> coeff;  // coeff[p-1] = binom(K,p)

    explicit MixtureSpec(int K_);
};

double xi(double x, int K);
double xi_prime(double x, int K);
double xi_second(double x, int K);

/// One draw of the Gaussian coefficients. level[p-1] holds the N^p ordered
/// p-tuple coefficients in row-major order (i_1 slowest). Regeneration from
/// (N, K, seed) is bit-exact; the draw order is level 1 upward, row-major
/// within a level.
struct PSpinSample {
    int n = 0;
    MixtureSpec spec;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> level;
};

inline constexpr int kPSpinEnumerationCap = 20;
inline constexpr std::size_t kPSpinMemoryCap = std::size_t{1} << 23;  // doubles

PSpinSample sample_pspin(int n, int K, std::uint64_t seed,
                         std::size_t memory_cap = kPSpinMemoryCap);

/// H(sigma) = sum_p sqrt(binom(K,p)/N^{p-1}) sum_{tuples} g * sigma products.
/// Compensated summation; the N^p terms have mixed signs.
double evaluate(const PSpinSample& h, const Assignment& a);

struct MaxResult {
    double m_n = 0.0;      // max_sigma H(sigma)/N
    Assignment argmax;
};

/// Exact maximum over all 2^N assignments, Gray-code traversal with per-flip
/// deltas accumulated from the tuples containing the flipped index;
/// re-anchored against a direct evaluation every 2^16 flips.
MaxResult max_pspin(const PSpinSample& h, int limit = kPSpinEnumerationCap);

/// H(sigma) for all 2^N states indexed by mask (bit i set = spin i+1 is -1).
std::vector<double> energy_table(const PSpinSample& h, int limit = 14);

double overlap(const Assignment& a1, const Assignment& a2);

struct CovarianceReport {
    double r = 0.0;           // overlap of the pair
    double empirical = 0.0;   // mean of H(a1)H(a2) over draws
    double expected = 0.0;    // N * xi(R)
    double se = 0.0;
};

std::vector<CovarianceReport> covariance_check(
    int n, int K, const std::vector<std::pair<Assignment, Assignment>>& pairs,
    int samples, std::uint64_t seed, int n_threads = 0);

}  // namespace satglass
