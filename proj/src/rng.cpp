#include "satglass/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "satglass/util.hpp"

namespace satglass {

namespace {

constexpr double kTwoPi = 6.283185307179586477;
constexpr double kLogSqrt2Pi = 0.9189385332046727418;

const std::vector<double>& log_factorial_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(1024);
        t[0] = 0.0;
        for (std::size_t k = 1; k < t.size(); ++k)
            t[k] = t[k - 1] + std::log(static_cast<double>(k));
        return t;
    }();
    return table;
}

}  // namespace

double log_factorial(std::int64_t k) {
    if (k < 0) throw std::invalid_argument("log_factorial: negative argument");
    const auto& table = log_factorial_table();
    if (static_cast<std::size_t>(k) < table.size()) return table[static_cast<std::size_t>(k)];
    // Stirling series; relative error < 1e-12 for k >= 1024.
    double x = static_cast<double>(k) + 1.0;
    return (x - 0.5) * std::log(x) - x + kLogSqrt2Pi + 1.0 / (12.0 * x) -
           1.0 / (360.0 * x * x * x);
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed ^ 0x5a17b0a7d5f42e3bULL)) {
    engine_.discard(8);  // skip the low-entropy warmup of single-value seeding
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t threshold = (-n) % n;  // 2^64 mod n
    for (;;) {
        std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::gaussian() {
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::int64_t Rng::poisson(double mean) {
    if (mean < 0.0 || !std::isfinite(mean))
        throw std::invalid_argument("Rng::poisson: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    return mean < 30.0 ? poisson_inversion(mean) : poisson_rejection(mean);
}

std::int64_t Rng::poisson_inversion(double mean) {
    // Exact CDF inversion; consumes exactly one uniform.
    const double u = uniform01();
    double p = std::exp(-mean);
    double cum = p;
    std::int64_t k = 0;
    const std::int64_t cap = static_cast<std::int64_t>(mean + 40.0 * std::sqrt(mean) + 64.0);
    while (u > cum && k < cap) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
    }
    return k;
}

std::int64_t Rng::poisson_rejection(double mean) {
    // Hormann's transformed rejection with squeeze (PTRS).
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform01() - 0.5;
        const double v = uniform01();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const std::int64_t k = static_cast<std::int64_t>(kf);
        const double lhs = std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b);
        const double rhs = -mean + kf * loglam - log_factorial(k);
        if (lhs <= rhs) return k;
    }
}

}  // namespace satglass
