#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace satglass {

// SplitMix64 mixing step. Used both as a seed scrambler and to derive
// independent per-sample streams from (master seed, counter).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    return splitmix64(splitmix64(master) ^ splitmix64(counter * 0x9e3779b97f4a7c15ULL + 1));
}

// Compensated (Kahan) accumulator. Summation order defines the result bits,
// so reductions that must be reproducible always add in fixed index order.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

struct SampleStats {
    double mean = 0.0;
    double se = 0.0;  // sample standard deviation / sqrt(n); 0 when n < 2
};

// Mean and standard error with a fixed-order compensated reduction.
inline SampleStats summarize(std::span<const double> xs) {
    SampleStats out;
    const std::size_t n = xs.size();
    if (n == 0) return out;
    KahanSum s;
    for (double x : xs) s.add(x);
    out.mean = s.value() / static_cast<double>(n);
    if (n >= 2) {
        KahanSum q;
        for (double x : xs) {
            double d = x - out.mean;
            q.add(d * d);
        }
        double var = q.value() / static_cast<double>(n - 1);
        out.se = std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs body(i) for i in [0, n). Tasks must be independent; any reduction
// over per-index results happens afterwards in index order, so the outcome
// does not depend on the thread count.
inline void parallel_for(std::size_t n, int n_threads,
                         const std::function<void(std::size_t)>& body) {
    const int workers = resolve_threads(n_threads);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(workers)));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 1; t < spawn; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = -HUGE_VAL;
    for (double x : xs)
        if (x > m) m = x;
    if (!std::isfinite(m)) return m;
    KahanSum s;
    for (double x : xs) s.add(std::exp(x - m));
    return m + std::log(s.value());
}

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// log Phi(x), stable far into the left tail where erfc underflows.
inline double log_norm_cdf(double x) {
    if (x > -37.0) {
        double c = norm_cdf(x);
        if (c > 0.0) return std::log(c);
    }
    // Asymptotic expansion of Mills' ratio.
    double z = -x;  // z > 0, large
    double z2 = z * z;
    double corr = std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
    return -0.5 * z2 - 0.5 * std::log(2.0 * M_PI) - std::log(z) + corr;
}

}  // namespace satglass
