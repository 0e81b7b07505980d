#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satglass/ksat.hpp"
#include "satglass/pspin.hpp"

namespace satglass {

/// Sample mean with its standard error (sample sd / sqrt(n)). Sample i is
/// seeded by derive_seed(seed, i), so runs are reproducible, prefix
/// consistent, and independent of evaluation order and thread count.
struct EstimateResult {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
};

EstimateResult estimate_m_n_alpha(int n, int K, double alpha, int n_samples,
                                  std::uint64_t seed, int n_threads = 0,
                                  int limit = kKsatEnumerationCap);

EstimateResult estimate_m_n(int n, int K, int n_samples, std::uint64_t seed,
                            int n_threads = 0, int limit = kPSpinEnumerationCap);

struct ResidualRecord {
    double alpha = 0.0;
    EstimateResult est_m_n_alpha;
    EstimateResult est_m_n;
    double residual = 0.0;     // mean_mna + alpha/2^K - (sqrt(alpha)/2^K) mean_mn
    double residual_se = 0.0;  // sqrt(se1^2 + (alpha/4^K) se2^2)
};

ResidualRecord theorem1_residual(int n, int K, double alpha, int n_samples,
                                 std::uint64_t seed, int n_threads = 0);

struct SweepResult {
    std::vector<ResidualRecord> records;
    double fitted_exponent = 0.0;  // log|residual| vs log alpha least squares
    bool fit_valid = false;        // needs >= 2 points with |residual| > 3 se
    int n_fit_points = 0;
};

SweepResult residual_sweep(int n, int K, const std::vector<double>& alphas,
                           int n_samples, std::uint64_t seed, int n_threads = 0);

/// CSV with 17-significant-digit numbers so reruns diff cleanly.
std::string sweep_csv(const SweepResult& sweep);

struct Theorem1Checks {
    bool ratio_decreasing = false;  // |residual|/sqrt(alpha) decreasing in alpha
    bool exponent_ok = false;       // fitted exponent < 1/2
    bool endpoint_ok = false;       // 15% relative match at the largest alpha
    double endpoint_rel_err = 0.0;
};

Theorem1Checks check_theorem1(const SweepResult& sweep, int K);

}  // namespace satglass
