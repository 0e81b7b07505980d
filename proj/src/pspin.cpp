#include "satglass/pspin.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "satglass/rng.hpp"
#include "satglass/util.hpp"

namespace satglass {

namespace {

std::size_t ipow(int n, int p) {
    std::size_t r = 1;
    for (int q = 0; q < p; ++q) r *= static_cast<std::size_t>(n);
    return r;
}

}  // namespace

MixtureSpec::MixtureSpec(int K_) : K(K_) {
    if (K < 2) throw std::invalid_argument("K must be >= 2");
    coeff.resize(static_cast<std::size_t>(K));
    double c = 1.0;
    for (int p = 1; p <= K; ++p) {
        c = c * static_cast<double>(K - p + 1) / static_cast<double>(p);
        coeff[static_cast<std::size_t>(p) - 1] = c;
    }
}

double xi(double x, int K) { return std::pow(1.0 + x, K) - 1.0; }

double xi_prime(double x, int K) { return K * std::pow(1.0 + x, K - 1); }

double xi_second(double x, int K) {
    return static_cast<double>(K) * (K - 1) * std::pow(1.0 + x, K - 2);
}

PSpinSample sample_pspin(int n, int K, std::uint64_t seed, std::size_t memory_cap) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    MixtureSpec spec(K);
    std::size_t total = 0;
    for (int p = 1; p <= K; ++p) total += ipow(n, p);
    if (total > memory_cap)
        throw CapacityError("sample_pspin: " + std::to_string(total) +
                            " coefficients exceed the memory cap");
    PSpinSample h{n, spec, seed, {}};
    h.level.resize(static_cast<std::size_t>(K));
    Rng rng(seed);
    for (int p = 1; p <= K; ++p) {
        auto& g = h.level[static_cast<std::size_t>(p) - 1];
        g.resize(ipow(n, p));
        for (double& x : g) x = rng.gaussian();
    }
    return h;
}

namespace {

double level_weight(const MixtureSpec& spec, int n, int p) {
    return std::sqrt(spec.coeff[static_cast<std::size_t>(p) - 1] /
                     std::pow(static_cast<double>(n), p - 1));
}

// Sum over ordered p-tuples with an odometer that keeps spin prefix products,
// so each tuple costs O(1) amortized.
double level_sum(const double* g, const Assignment& a, int p, int n) {
    std::vector<int> d(static_cast<std::size_t>(p), 0);
    std::vector<double> pref(static_cast<std::size_t>(p) + 1);
    pref[0] = 1.0;
    for (int q = 0; q < p; ++q) pref[q + 1] = pref[q] * a[0];
    KahanSum s;
    const std::size_t total = ipow(n, p);
    for (std::size_t idx = 0;;) {
        s.add(g[idx] * pref[static_cast<std::size_t>(p)]);
        if (++idx == total) break;
        int q = p - 1;
        while (d[static_cast<std::size_t>(q)] == n - 1) d[static_cast<std::size_t>(q--)] = 0;
        ++d[static_cast<std::size_t>(q)];
        for (int r = q; r < p; ++r)
            pref[r + 1] = pref[r] * a[static_cast<std::size_t>(d[static_cast<std::size_t>(r)])];
    }
    return s.value();
}

// For each variable v, the tuples in which v has odd multiplicity; flipping v
// negates exactly those terms. H(sigma) = A + sigma_v * B_v with
// B_v = sum of coef * prod over the other odd-multiplicity indices.
struct FlipEntry {
    double coef;            // level weight times the Gaussian coefficient
    std::uint32_t others;   // bitmask of the other odd-multiplicity indices
};

struct FlipTables {
    std::vector<std::vector<FlipEntry>> per_var;

    FlipTables(const PSpinSample& h) {
        const int n = h.n;
        const int K = h.spec.K;
        if (n > 31) throw CapacityError("flip tables need n <= 31");
        per_var.resize(static_cast<std::size_t>(n));
        std::vector<int> d;
        for (int p = 1; p <= K; ++p) {
            const double w = level_weight(h.spec, n, p);
            const double* g = h.level[static_cast<std::size_t>(p) - 1].data();
            const std::size_t total = ipow(n, p);
            d.assign(static_cast<std::size_t>(p), 0);
            // XOR of index bits = odd-multiplicity set; the all-zero tuple
            // holds index 0 with multiplicity p.
            std::uint32_t odd = (p & 1) ? 1u : 0u;
            for (std::size_t idx = 0;;) {
                if (odd != 0) {
                    const double coef = w * g[idx];
                    for (std::uint32_t rem = odd; rem != 0; rem &= rem - 1) {
                        const int v = std::countr_zero(rem);
                        per_var[static_cast<std::size_t>(v)].push_back(
                            FlipEntry{coef, odd ^ (1u << v)});
                    }
                }
                if (++idx == total) break;
                int q = p - 1;
                while (d[static_cast<std::size_t>(q)] == n - 1) {
                    odd ^= (1u << (n - 1)) ^ 1u;  // digit wraps n-1 -> 0
                    d[static_cast<std::size_t>(q--)] = 0;
                }
                odd ^= 1u << d[static_cast<std::size_t>(q)];
                ++d[static_cast<std::size_t>(q)];
                odd ^= 1u << d[static_cast<std::size_t>(q)];
            }
        }
    }

    // B_v at the state given by mask (bit set = spin -1).
    double b_of(std::uint32_t v, std::uint32_t mask) const {
        double b = 0.0;
        for (const FlipEntry& e : per_var[v]) {
            const int par = std::popcount(mask & e.others) & 1;
            b += par ? -e.coef : e.coef;
        }
        return b;
    }
};

constexpr std::uint64_t kReanchorPeriod = std::uint64_t{1} << 16;

}  // namespace

double evaluate(const PSpinSample& h, const Assignment& a) {
    if (static_cast<int>(a.size()) != h.n)
        throw std::invalid_argument("assignment length must equal n");
    KahanSum total;
    for (int p = 1; p <= h.spec.K; ++p) {
        const double w = level_weight(h.spec, h.n, p);
        total.add(w * level_sum(h.level[static_cast<std::size_t>(p) - 1].data(), a, p, h.n));
    }
    return total.value();
}

MaxResult max_pspin(const PSpinSample& h, int limit) {
    if (h.n > limit)
        throw CapacityError("max_pspin: n=" + std::to_string(h.n) +
                            " exceeds enumeration cap " + std::to_string(limit));
    FlipTables tables(h);
    std::uint32_t mask = 0;
    double e = evaluate(h, assignment_from_mask(0, h.n));
    double best = e;
    std::uint32_t best_mask = 0;
    const std::uint64_t total = std::uint64_t{1} << h.n;
    for (std::uint64_t s = 1; s < total; ++s) {
        const auto v = static_cast<std::uint32_t>(std::countr_zero(s));
        const double sig_old = (mask >> v) & 1u ? -1.0 : 1.0;
        e -= 2.0 * sig_old * tables.b_of(v, mask);
        mask ^= 1u << v;
        if ((s & (kReanchorPeriod - 1)) == 0)
            e = evaluate(h, assignment_from_mask(mask, h.n));
        if (e > best) {
            best = e;
            best_mask = mask;
        }
    }
    return MaxResult{best / h.n, assignment_from_mask(best_mask, h.n)};
}

std::vector<double> energy_table(const PSpinSample& h, int limit) {
    if (h.n > limit)
        throw CapacityError("energy_table: n=" + std::to_string(h.n) +
                            " exceeds table cap " + std::to_string(limit));
    FlipTables tables(h);
    const std::uint64_t total = std::uint64_t{1} << h.n;
    std::vector<double> table(total);
    std::uint32_t mask = 0;
    double e = evaluate(h, assignment_from_mask(0, h.n));
    table[0] = e;
    for (std::uint64_t s = 1; s < total; ++s) {
        const auto v = static_cast<std::uint32_t>(std::countr_zero(s));
        const double sig_old = (mask >> v) & 1u ? -1.0 : 1.0;
        e -= 2.0 * sig_old * tables.b_of(v, mask);
        mask ^= 1u << v;
        if ((s & (kReanchorPeriod - 1)) == 0)
            e = evaluate(h, assignment_from_mask(mask, h.n));
        table[mask] = e;
    }
    return table;
}

double overlap(const Assignment& a1, const Assignment& a2) {
    if (a1.size() != a2.size())
        throw std::invalid_argument("overlap: length mismatch");
    long long dot = 0;
    for (std::size_t i = 0; i < a1.size(); ++i)
        dot += static_cast<long long>(a1[i]) * a2[i];
    return static_cast<double>(dot) / static_cast<double>(a1.size());
}

std::vector<CovarianceReport> covariance_check(
    int n, int K, const std::vector<std::pair<Assignment, Assignment>>& pairs,
    int samples, std::uint64_t seed, int n_threads) {
    if (samples < 2) throw std::invalid_argument("covariance_check: samples >= 2");
    const std::size_t np = pairs.size();
    std::vector<std::vector<double>> prod(np, std::vector<double>(static_cast<std::size_t>(samples)));
    parallel_for(static_cast<std::size_t>(samples), n_threads, [&](std::size_t s) {
        PSpinSample h = sample_pspin(n, K, derive_seed(seed, s));
        for (std::size_t p = 0; p < np; ++p)
            prod[p][s] = evaluate(h, pairs[p].first) * evaluate(h, pairs[p].second);
    });
    std::vector<CovarianceReport> out(np);
    for (std::size_t p = 0; p < np; ++p) {
        const SampleStats st = summarize(prod[p]);
        const double r = overlap(pairs[p].first, pairs[p].second);
        out[p] = CovarianceReport{r, st.mean, n * xi(r, K), st.se};
    }
    return out;
}

}  // namespace satglass
