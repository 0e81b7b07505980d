#pragma once

#include <cstdint>
#include <vector>

#include "satglass/ksat.hpp"
#include "satglass/pspin.hpp"

namespace satglass {

/// One point on the interpolation path H(t,sigma) = delta*H_{alpha(1-t)} +
/// sqrt(t)*beta*H. beta_of picks beta so that the xi(R_12) coefficients in
/// the derivative terms I and II cancel.
struct InterpolationPoint {
    double t = 0.0;
    double alpha = 0.0;
    double delta = 0.0;
    double beta = 0.0;
    int K = 0;
    int n = 0;
};

double beta_of(double alpha, double delta, int K);

InterpolationPoint make_point(double t, double alpha, double delta, int K, int n);

double interpolating_hamiltonian(double t, double delta, double beta,
                                 const KSatInstance& ksat_part,
                                 const PSpinSample& pspin_part,
                                 const Assignment& a);

/// Exact Gibbs data for one disorder draw at one t: all 2^N energies,
/// normalized weights, and the log partition sum. sum_shifted keeps
/// sum_sigma exp(H - max H), the quantity the sandwich bounds compare
/// against [1, 2^N] without rounding slack.
struct GibbsTable {
    int n = 0;
    std::vector<double> energy;
    std::vector<double> weight;
    double max_energy = 0.0;
    double sum_shifted = 0.0;
    double log_z = 0.0;
    double phi_sample = 0.0;  // log_z / N
};

inline constexpr int kInterpEnumerationCap = 14;

GibbsTable gibbs_from_energies(std::vector<double> energy, int n);

GibbsTable free_energy(double t, double delta, double beta,
                       const KSatInstance& ksat_part, const PSpinSample& pspin_part,
                       int limit = kInterpEnumerationCap);

struct SandwichResult {
    bool lower_ok = false;  // max H / N  <=  phi_sample
    bool upper_ok = false;  // phi_sample <=  log 2 + max H / N
};

SandwichResult sandwich_check(const GibbsTable& table);

/// Q_{1..n} = (1/N) sum_i Av_eps prod_l (1+eps sigma_i^l)/2; computed from
/// the integer counts of all-plus and all-minus sites, so Q_1 = 1/2 and
/// Q_{1,2} = (1+R_{1,2})/4 hold at machine precision.
double multi_overlap(const std::vector<Assignment>& replicas);

struct DerivativeTerms {
    double term_i = 0.0;        // (beta^2/2)(xi(1) - <xi(R_12)>_t)
    double term_ii = 0.0;       // alpha * sum_{n<=trunc} x^n/n <Q_{1..n}^K>_t
    double iii_bound = 0.0;     // alpha (delta - x - x^2/2), x = 1-e^{-delta}
    std::vector<double> ii_terms;
    double xi_r_avg = 0.0;      // <xi(R_12)>_t for diagnostics
};

/// Single-draw Gibbs averages by exact enumeration. Replica averages reduce
/// to per-site moment sums: <prod_S sigma> over the single-replica weights
/// raised to the replica count, so no 2^{nN} state space is materialized.
DerivativeTerms derivative_terms(const InterpolationPoint& pt,
                                 const KSatInstance& ksat_part,
                                 const PSpinSample& pspin_part,
                                 int truncation = 8,
                                 int limit = kInterpEnumerationCap);

/// Test oracle: <Q_{1..n}^K> by direct summation over n-tuples of states.
double q_power_avg_direct(const GibbsTable& table, int K, int n_replicas);

/// Same quantity through the moment expansion used by derivative_terms.
double q_power_avg_moments(const GibbsTable& table, int K, int n_replicas);

struct FdCheckResult {
    double mean_fd = 0.0;      // symmetric difference quotient of phi
    double se_fd = 0.0;
    double mean_decomp = 0.0;  // I + II_truncated
    double se_decomp = 0.0;
    double mean_diff = 0.0;    // paired per-draw difference
    double se_diff = 0.0;
    double iii_bound = 0.0;
    int n_draws = 0;
    bool ok = false;  // |mean_fd - mean_decomp| <= iii_bound + 4 combined se
};

/// Common-random-number check that d/dt E phi matches I + II up to III.
/// Draw i reuses one p-spin sample and one k-sat uniform stream for the
/// densities alpha(1-t-h), alpha(1-t), alpha(1-t+h); below the Poisson
/// inversion threshold those instances are nested prefixes.
FdCheckResult fd_derivative_check(int n, int K, double alpha, double delta,
                                  double t, double h, int truncation,
                                  int n_draws, std::uint64_t seed,
                                  int n_threads = 0);

}  // namespace satglass
