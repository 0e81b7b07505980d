#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "satglass/mc.hpp"
#include "satglass/rng.hpp"
#include "satglass/util.hpp"

using namespace satglass;

TEST_CASE("estimates are deterministic and thread-count independent") {
    EstimateResult a = estimate_m_n_alpha(8, 2, 3.0, 200, 42, 1);
    EstimateResult b = estimate_m_n_alpha(8, 2, 3.0, 200, 42, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.se == b.se);
    CHECK(a.n_samples == 200);
    CHECK(a.seed == 42);

    EstimateResult c = estimate_m_n(6, 2, 150, 43, 1);
    EstimateResult d = estimate_m_n(6, 2, 150, 43, 4);
    CHECK(c.mean == d.mean);
    CHECK(c.se == d.se);
}

TEST_CASE("per-sample seeding matches a manual loop bit for bit") {
    const int n = 7, K = 2, samples = 60;
    const double alpha = 2.0;
    const std::uint64_t seed = 909;
    EstimateResult est = estimate_m_n_alpha(n, K, alpha, samples, seed);
    std::vector<double> manual(samples);
    for (int i = 0; i < samples; ++i)
        manual[static_cast<std::size_t>(i)] = m_n_alpha(
            sample_instance(n, K, alpha, derive_seed(seed, static_cast<std::uint64_t>(i))));
    SampleStats st = summarize(manual);
    CHECK(est.mean == st.mean);
    CHECK(est.se == st.se);
}

TEST_CASE("standard error shrinks with more samples") {
    EstimateResult small = estimate_m_n(6, 2, 100, 11);
    EstimateResult large = estimate_m_n(6, 2, 400, 11);
    CHECK(small.se > 0.0);
    CHECK(large.se < small.se);
}

TEST_CASE("capacity and argument checks") {
    CHECK_THROWS_AS(estimate_m_n_alpha(30, 2, 1.0, 10, 1), CapacityError);
    CHECK_THROWS_AS(estimate_m_n(25, 2, 10, 1), CapacityError);
    CHECK_THROWS_AS(estimate_m_n(6, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("residual identity and zero-density edge") {
    ResidualRecord r = theorem1_residual(8, 2, 4.0, 80, 77);
    const double twoK = 4.0;
    const double expect =
        r.est_m_n_alpha.mean + 4.0 / twoK - std::sqrt(4.0) / twoK * r.est_m_n.mean;
    CHECK(std::abs(r.residual - expect) < 1e-15);
    const double se_expect = std::sqrt(r.est_m_n_alpha.se * r.est_m_n_alpha.se +
                                       4.0 / 16.0 * r.est_m_n.se * r.est_m_n.se);
    CHECK(std::abs(r.residual_se - se_expect) < 1e-15);

    ResidualRecord zero = theorem1_residual(6, 2, 0.0, 50, 5);
    CHECK(zero.est_m_n_alpha.mean == 0.0);
    CHECK(zero.residual == 0.0);
    CHECK(zero.residual_se == 0.0);
}

TEST_CASE("sweep rows reproduce theorem1_residual at the same master seed") {
    const int n = 7, K = 2, samples = 60;
    const std::uint64_t seed = 555;
    SweepResult sw = residual_sweep(n, K, {2.0, 8.0}, samples, seed);
    REQUIRE(sw.records.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        ResidualRecord direct =
            theorem1_residual(n, K, sw.records[i].alpha, samples, seed);
        CHECK(sw.records[i].residual == direct.residual);
        CHECK(sw.records[i].est_m_n_alpha.mean == direct.est_m_n_alpha.mean);
        CHECK(sw.records[i].est_m_n.mean == direct.est_m_n.mean);
    }
    CHECK_THROWS_AS(residual_sweep(n, K, {}, samples, seed), std::invalid_argument);
}

TEST_CASE("csv format: header, row count, and 17-digit round trip") {
    SweepResult sw = residual_sweep(6, 2, {1.0 / 3.0, 4.0}, 40, 31);
    std::string csv = sweep_csv(sw);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "alpha,n,mean_mna,se_mna,mean_mn,se_mn,residual,residual_se");
    int rows = 0;
    bool roundtrip = true;
    while (std::getline(in, line)) {
        const double alpha = std::strtod(line.c_str(), nullptr);
        roundtrip = roundtrip && (alpha == sw.records[static_cast<std::size_t>(rows)].alpha);
        ++rows;
    }
    CHECK(rows == 2);
    CHECK(roundtrip);  // %.17g preserves doubles exactly
    const std::string again = sweep_csv(residual_sweep(6, 2, {1.0 / 3.0, 4.0}, 40, 31));
    CHECK(csv == again);
}

TEST_CASE("check_theorem1 logic on synthetic sweeps") {
    auto mk = [](double alpha, double residual, double se, double mna_mean,
                 double mn_mean) {
        ResidualRecord r;
        r.alpha = alpha;
        r.residual = residual;
        r.residual_se = se;
        r.est_m_n_alpha.mean = mna_mean;
        r.est_m_n.mean = mn_mean;
        return r;
    };

    SweepResult good;
    // residual = 8 alpha^{-1/2}: ratio strictly decreasing, slope -0.5
    good.records = {mk(1.0, 8.0, 0.01, -13.5, 1.5), mk(4.0, 4.0, 0.01, -13.5, 1.5),
                    mk(16.0, 2.0, 0.01, -13.5, 1.5), mk(64.0, 1.0, 0.01, -13.5, 1.5)};
    good.fit_valid = true;
    good.fitted_exponent = -0.5;
    // K=2: predicted at alpha=64 is -16 + 2*1.5/... = -16 + (8/4)*1.5 = -13
    Theorem1Checks ck = check_theorem1(good, 2);
    CHECK(ck.ratio_decreasing);
    CHECK(ck.exponent_ok);
    CHECK(ck.endpoint_ok);
    CHECK(ck.endpoint_rel_err == doctest::Approx(0.5 / 13.0).epsilon(1e-12));

    SweepResult flat = good;
    flat.records[3].residual = 40.0;  // ratio increases at the end
    CHECK_FALSE(check_theorem1(flat, 2).ratio_decreasing);

    SweepResult steep = good;
    steep.fitted_exponent = 0.7;
    CHECK_FALSE(check_theorem1(steep, 2).exponent_ok);

    SweepResult off = good;
    off.records[3].est_m_n_alpha.mean = -20.0;
    CHECK_FALSE(check_theorem1(off, 2).endpoint_ok);

    SweepResult lone;
    lone.records = {mk(4.0, 1.0, 0.01, -1.0, 1.0)};
    CHECK_FALSE(check_theorem1(lone, 2).ratio_decreasing);
}

TEST_CASE("small end-to-end sweep produces a usable fit") {
    SweepResult sw = residual_sweep(8, 2, {4.0, 16.0, 64.0}, 300, 2027);
    REQUIRE(sw.records.size() == 3);
    for (const ResidualRecord& r : sw.records) {
        CHECK(r.est_m_n_alpha.se > 0.0);
        CHECK(r.est_m_n.se > 0.0);
        CHECK(std::isfinite(r.residual));
    }
    if (sw.fit_valid) CHECK(std::isfinite(sw.fitted_exponent));
}
