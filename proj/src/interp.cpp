#include "satglass/interp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "satglass/rng.hpp"
#include "satglass/util.hpp"

namespace satglass {

double beta_of(double alpha, double delta, int K) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
    return std::sqrt(alpha) * (-std::expm1(-delta)) / std::ldexp(1.0, K);
}

InterpolationPoint make_point(double t, double alpha, double delta, int K, int n) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in [0,1]");
    if (K < 2) throw std::invalid_argument("K must be >= 2");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    return InterpolationPoint{t, alpha, delta, beta_of(alpha, delta, K), K, n};
}

double interpolating_hamiltonian(double t, double delta, double beta,
                                 const KSatInstance& ksat_part,
                                 const PSpinSample& pspin_part,
                                 const Assignment& a) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in [0,1]");
    if (ksat_part.n != pspin_part.n || static_cast<int>(a.size()) != ksat_part.n)
        throw std::invalid_argument("dimension mismatch between disorder parts");
    const double ks = delta * static_cast<double>(hamiltonian(ksat_part, a));
    const double ps = t > 0.0 ? std::sqrt(t) * beta * evaluate(pspin_part, a) : 0.0;
    return ks + ps;
}

GibbsTable gibbs_from_energies(std::vector<double> energy, int n) {
    if (energy.size() != (std::size_t{1} << n))
        throw std::invalid_argument("energy table must have 2^n entries");
    GibbsTable tab;
    tab.n = n;
    tab.energy = std::move(energy);
    tab.max_energy = tab.energy[0];
    for (double e : tab.energy) tab.max_energy = std::max(tab.max_energy, e);
    KahanSum s;
    for (double e : tab.energy) s.add(std::exp(e - tab.max_energy));
    tab.sum_shifted = s.value();
    tab.log_z = tab.max_energy + std::log(tab.sum_shifted);
    tab.phi_sample = tab.log_z / n;
    tab.weight.resize(tab.energy.size());
    for (std::size_t i = 0; i < tab.energy.size(); ++i)
        tab.weight[i] = std::exp(tab.energy[i] - tab.log_z);
    return tab;
}

GibbsTable free_energy(double t, double delta, double beta,
                       const KSatInstance& ksat_part, const PSpinSample& pspin_part,
                       int limit) {
    if (ksat_part.n != pspin_part.n)
        throw std::invalid_argument("disorder parts disagree on n");
    if (ksat_part.n > limit)
        throw CapacityError("free_energy: n exceeds enumeration cap");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in [0,1]");
    const int n = ksat_part.n;
    const std::vector<std::int32_t> unsat = unsat_table(ksat_part, limit);
    std::vector<double> energy(unsat.size());
    const double c = t > 0.0 ? std::sqrt(t) * beta : 0.0;
    if (c != 0.0) {
        const std::vector<double> pe = energy_table(pspin_part, limit);
        for (std::size_t i = 0; i < energy.size(); ++i)
            energy[i] = -delta * unsat[i] + c * pe[i];
    } else {
        for (std::size_t i = 0; i < energy.size(); ++i)
            energy[i] = -delta * unsat[i];
    }
    return gibbs_from_energies(std::move(energy), n);
}

SandwichResult sandwich_check(const GibbsTable& table) {
    // sum_shifted in [1, 2^N] is the exact-arithmetic form of
    // max/N <= phi <= log2 + max/N; comparing here avoids log rounding.
    SandwichResult r;
    r.lower_ok = table.sum_shifted >= 1.0;
    r.upper_ok = table.sum_shifted <= std::ldexp(1.0, table.n);
    return r;
}

double multi_overlap(const std::vector<Assignment>& replicas) {
    if (replicas.empty()) throw std::invalid_argument("need at least one replica");
    const std::size_t n = replicas[0].size();
    for (const Assignment& a : replicas)
        if (a.size() != n) throw std::invalid_argument("replica length mismatch");
    // Av over eps makes each site contribute 1/2 iff all replicas agree there.
    long long all_plus = 0, all_minus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool plus = true, minus = true;
        for (const Assignment& a : replicas) {
            plus = plus && a[i] > 0;
            minus = minus && a[i] < 0;
        }
        all_plus += plus;
        all_minus += minus;
    }
    return static_cast<double>(all_plus + all_minus) / (2.0 * static_cast<double>(n));
}

namespace {

// <prod_{i in mask} sigma_i>_t for every mask with popcount <= max_order.
std::unordered_map<std::uint32_t, double> subset_moments(const GibbsTable& table,
                                                         int max_order) {
    std::unordered_map<std::uint32_t, double> m;
    m.reserve(1024);
    const std::size_t states = table.weight.size();
    const int n = table.n;
    std::vector<std::uint32_t> masks{0};
    std::vector<int> pos(static_cast<std::size_t>(max_order), 0);
    // enumerate index subsets of size 1..max_order
    for (int q = 1; q <= std::min(max_order, n); ++q) {
        for (int i = 0; i < q; ++i) pos[static_cast<std::size_t>(i)] = i;
        while (true) {
            std::uint32_t mask = 0;
            for (int i = 0; i < q; ++i) mask |= 1u << pos[static_cast<std::size_t>(i)];
            masks.push_back(mask);
            int i = q - 1;
            while (i >= 0 && pos[static_cast<std::size_t>(i)] == n - q + i) --i;
            if (i < 0) break;
            ++pos[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < q; ++j)
                pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    for (std::uint32_t mask : masks) {
        KahanSum s;
        for (std::size_t st = 0; st < states; ++st) {
            const int par = std::popcount(static_cast<std::uint32_t>(st) & mask) & 1;
            s.add(par ? -table.weight[st] : table.weight[st]);
        }
        m[mask] = s.value();
    }
    return m;
}

// <xi(R_12)>_t = sum_p binom(K,p) N^{-p} sum_{p-tuples} M(odd-set)^2.
double xi_r12_avg(const GibbsTable& table,
                  const std::unordered_map<std::uint32_t, double>& moments, int K) {
    const int n = table.n;
    const MixtureSpec spec(K);
    double total = 0.0;
    std::vector<int> d;
    for (int p = 1; p <= K; ++p) {
        d.assign(static_cast<std::size_t>(p), 0);
        // all-zero tuple holds index 0 with multiplicity p
        std::uint32_t odd = (p & 1) ? 1u : 0u;
        const std::size_t count = [&] {
            std::size_t c = 1;
            for (int q = 0; q < p; ++q) c *= static_cast<std::size_t>(n);
            return c;
        }();
        KahanSum s;
        for (std::size_t idx = 0;;) {
            const double mm = moments.at(odd);
            s.add(mm * mm);
            if (++idx == count) break;
            int q = p - 1;
            while (d[static_cast<std::size_t>(q)] == n - 1) {
                odd ^= (1u << (n - 1)) ^ 1u;
                d[static_cast<std::size_t>(q--)] = 0;
            }
            odd ^= 1u << d[static_cast<std::size_t>(q)];
            ++d[static_cast<std::size_t>(q)];
            odd ^= 1u << d[static_cast<std::size_t>(q)];
        }
        total += spec.coeff[static_cast<std::size_t>(p) - 1] *
                 s.value() / std::pow(static_cast<double>(n), p);
    }
    return total;
}

// <Q_{1..n}^K>_t for n = 1..n_max. Q^K expands over K-tuples of sites and
// sign vectors eps; replica independence turns the n-replica average into
// mu(tuple,eps)^n with mu a signed combination of subset moments.
std::vector<double> q_power_avgs(const GibbsTable& table,
                                 const std::unordered_map<std::uint32_t, double>& moments,
                                 int K, int n_max) {
    const int n = table.n;
    const std::uint32_t nsub = 1u << K;
    std::vector<double> sub_mask(nsub);     // odd-set moment per subset of [K]
    std::vector<std::uint32_t> om(nsub, 0);
    std::vector<KahanSum> acc(static_cast<std::size_t>(n_max));
    std::vector<int> d(static_cast<std::size_t>(K), 0);
    std::size_t count = 1;
    for (int q = 0; q < K; ++q) count *= static_cast<std::size_t>(n);
    for (std::size_t idx = 0;;) {
        for (std::uint32_t s = 1; s < nsub; ++s) {
            const int r = std::countr_zero(s);
            om[s] = om[s & (s - 1)] ^ (1u << d[static_cast<std::size_t>(r)]);
        }
        for (std::uint32_t s = 0; s < nsub; ++s) sub_mask[s] = moments.at(om[s]);
        for (std::uint32_t eps = 0; eps < nsub; ++eps) {
            double mu = 0.0;
            for (std::uint32_t s = 0; s < nsub; ++s) {
                const int par = std::popcount(eps & s) & 1;
                mu += par ? -sub_mask[s] : sub_mask[s];
            }
            mu /= static_cast<double>(nsub);
            double power = mu;
            for (int m = 0; m < n_max; ++m) {
                acc[static_cast<std::size_t>(m)].add(power);
                power *= mu;
            }
        }
        if (++idx == count) break;
        int q = K - 1;
        while (d[static_cast<std::size_t>(q)] == n - 1) d[static_cast<std::size_t>(q--)] = 0;
        ++d[static_cast<std::size_t>(q)];
    }
    const double norm = static_cast<double>(count) * static_cast<double>(nsub);
    std::vector<double> out(static_cast<std::size_t>(n_max));
    for (int m = 0; m < n_max; ++m)
        out[static_cast<std::size_t>(m)] = acc[static_cast<std::size_t>(m)].value() / norm;
    return out;
}

}  // namespace

DerivativeTerms derivative_terms(const InterpolationPoint& pt,
                                 const KSatInstance& ksat_part,
                                 const PSpinSample& pspin_part,
                                 int truncation, int limit) {
    if (truncation < 2) throw std::invalid_argument("truncation must be >= 2");
    const GibbsTable table = free_energy(pt.t, pt.delta, pt.beta, ksat_part,
                                         pspin_part, limit);
    const auto moments = subset_moments(table, pt.K);
    DerivativeTerms out;
    out.xi_r_avg = xi_r12_avg(table, moments, pt.K);
    out.term_i = 0.5 * pt.beta * pt.beta * (xi(1.0, pt.K) - out.xi_r_avg);
    const double x = -std::expm1(-pt.delta);
    const std::vector<double> qk = q_power_avgs(table, moments, pt.K, truncation);
    out.ii_terms.resize(static_cast<std::size_t>(truncation));
    KahanSum ii;
    double xn = 1.0;
    for (int m = 1; m <= truncation; ++m) {
        xn *= x;
        const double term = pt.alpha * xn / m * qk[static_cast<std::size_t>(m) - 1];
        out.ii_terms[static_cast<std::size_t>(m) - 1] = term;
        ii.add(term);
    }
    out.term_ii = ii.value();
    out.iii_bound = pt.alpha * (pt.delta - x - 0.5 * x * x);
    return out;
}

double q_power_avg_direct(const GibbsTable& table, int K, int n_replicas) {
    const int n = table.n;
    if (n > 8 || n_replicas > 3)
        throw CapacityError("q_power_avg_direct capped at n <= 8, replicas <= 3");
    const std::size_t states = table.weight.size();
    const std::uint32_t full = static_cast<std::uint32_t>(states - 1);
    KahanSum total;
    // running AND of masks = all-minus sites, OR = complement of all-plus
    auto recurse = [&](auto&& self, int depth, double w, std::uint32_t acc_and,
                       std::uint32_t acc_or) -> void {
        if (depth == n_replicas) {
            const int agree = std::popcount(acc_and) +
                              std::popcount(static_cast<std::uint32_t>(~acc_or) & full);
            const double q = agree / (2.0 * n);
            total.add(w * std::pow(q, K));
            return;
        }
        for (std::size_t st = 0; st < states; ++st)
            self(self, depth + 1, w * table.weight[st],
                 acc_and & static_cast<std::uint32_t>(st),
                 acc_or | static_cast<std::uint32_t>(st));
    };
    recurse(recurse, 0, 1.0, full, 0);
    return total.value();
}

double q_power_avg_moments(const GibbsTable& table, int K, int n_replicas) {
    const auto moments = subset_moments(table, K);
    return q_power_avgs(table, moments, K, n_replicas).back();
}

FdCheckResult fd_derivative_check(int n, int K, double alpha, double delta,
                                  double t, double h, int truncation,
                                  int n_draws, std::uint64_t seed, int n_threads) {
    if (!(h > 0.0) || !(t - h >= 0.0) || !(t + h <= 1.0))
        throw std::invalid_argument("need 0 <= t-h and t+h <= 1 with h > 0");
    if (n_draws < 2) throw std::invalid_argument("n_draws must be >= 2");
    const double beta = beta_of(alpha, delta, K);
    std::vector<double> fd(static_cast<std::size_t>(n_draws));
    std::vector<double> decomp(static_cast<std::size_t>(n_draws));
    std::vector<double> diff(static_cast<std::size_t>(n_draws));
    parallel_for(static_cast<std::size_t>(n_draws), n_threads, [&](std::size_t i) {
        const std::uint64_t base = derive_seed(seed, i);
        const PSpinSample ps = sample_pspin(n, K, derive_seed(base, 1));
        const std::uint64_t ks = derive_seed(base, 2);
        const KSatInstance plus = sample_instance(n, K, alpha * (1.0 - t - h), ks);
        const KSatInstance minus = sample_instance(n, K, alpha * (1.0 - t + h), ks);
        const KSatInstance mid = sample_instance(n, K, alpha * (1.0 - t), ks);
        const double phi_p = free_energy(t + h, delta, beta, plus, ps).phi_sample;
        const double phi_m = free_energy(t - h, delta, beta, minus, ps).phi_sample;
        fd[i] = (phi_p - phi_m) / (2.0 * h);
        const InterpolationPoint pt = make_point(t, alpha, delta, K, n);
        const DerivativeTerms dt = derivative_terms(pt, mid, ps, truncation);
        decomp[i] = dt.term_i + dt.term_ii;
        diff[i] = fd[i] - decomp[i];
    });
    FdCheckResult r;
    const SampleStats sf = summarize(fd);
    const SampleStats sd = summarize(decomp);
    const SampleStats sx = summarize(diff);
    r.mean_fd = sf.mean;
    r.se_fd = sf.se;
    r.mean_decomp = sd.mean;
    r.se_decomp = sd.se;
    r.mean_diff = sx.mean;
    r.se_diff = sx.se;
    const double x = -std::expm1(-delta);
    r.iii_bound = alpha * (delta - x - 0.5 * x * x);
    r.n_draws = n_draws;
    const double tol = r.iii_bound + 4.0 * std::hypot(r.se_fd, r.se_decomp);
    r.ok = std::abs(r.mean_fd - r.mean_decomp) <= tol;
    return r;
}

}  // namespace satglass
