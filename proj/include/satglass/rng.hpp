#pragma once

#include <cstdint>
#include <random>

namespace satglass {

/// Seeded generator with self-contained distributions.
///
/// The raw engine (mt19937_64) is fully specified by the standard, and every
/// distribution below is implemented here rather than taken from <random>,
/// whose distributions are implementation-defined. A given seed therefore
/// reproduces the same stream bit-for-bit on any conforming toolchain.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0,1); safe as a log argument.
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection keeps it exact.
    std::uint64_t below(std::uint64_t n);

    /// Symmetric random sign.
    int sign_pm1() { return (next_u64() >> 63) ? 1 : -1; }

    /// Standard normal via Box-Muller (cosine branch). Consumes exactly two
    /// engine outputs per call, which keeps stream positions predictable.
    double gaussian();

    /// Poisson with the given mean: CDF inversion below 30 (one uniform per
    /// draw), transformed rejection above.
    std::int64_t poisson(double mean);

  private:
    std::int64_t poisson_inversion(double mean);
    std::int64_t poisson_rejection(double mean);

    std::mt19937_64 engine_;
};

/// log(k!) — table-backed for small k, Stirling series beyond.
double log_factorial(std::int64_t k);

}  // namespace satglass
