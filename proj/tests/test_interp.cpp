#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "satglass/interp.hpp"
#include "satglass/rng.hpp"
#include "satglass/util.hpp"

using namespace satglass;

namespace {

Assignment random_assignment(int n, Rng& rng) {
    Assignment a(static_cast<std::size_t>(n));
    for (auto& s : a) s = static_cast<Spin>(rng.sign_pm1());
    return a;
}

}  // namespace

TEST_CASE("beta_of closed values and monotonicity") {
    CHECK(beta_of(4.0, std::log(2.0), 2) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(beta_of(0.0, 1.0, 3) == 0.0);
    CHECK(beta_of(1.0, 0.0, 3) == 0.0);
    CHECK(beta_of(1.0, 0.3, 2) < beta_of(1.0, 0.6, 2));
    CHECK(beta_of(9.0, 0.5, 2) == doctest::Approx(3.0 * beta_of(1.0, 0.5, 2)).epsilon(1e-15));
    CHECK_THROWS_AS(beta_of(-1.0, 0.5, 2), std::invalid_argument);
    CHECK_THROWS_AS(beta_of(1.0, -0.5, 2), std::invalid_argument);
}

TEST_CASE("make_point validates its domain") {
    InterpolationPoint pt = make_point(0.5, 4.0, 0.5, 2, 8);
    CHECK(pt.beta == doctest::Approx(beta_of(4.0, 0.5, 2)).epsilon(1e-15));
    CHECK_THROWS_AS(make_point(-0.1, 1.0, 0.5, 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_point(1.1, 1.0, 0.5, 2, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_point(0.5, 1.0, 0.5, 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_point(0.5, 1.0, 0.5, 2, 0), std::invalid_argument);
}

TEST_CASE("interpolating hamiltonian endpoints") {
    const int n = 6;
    KSatInstance ks = sample_instance(n, 2, 2.0, 11);
    PSpinSample ps = sample_pspin(n, 2, 12);
    const double delta = 0.7, beta = 0.4;
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Assignment a = random_assignment(n, rng);
        double h0 = interpolating_hamiltonian(0.0, delta, beta, ks, ps, a);
        CHECK(h0 == delta * static_cast<double>(hamiltonian(ks, a)));
        double h1 = interpolating_hamiltonian(1.0, delta, beta, ks, ps, a);
        CHECK(h1 == doctest::Approx(delta * hamiltonian(ks, a) + beta * evaluate(ps, a))
                        .epsilon(1e-14));
        double hm = interpolating_hamiltonian(0.25, delta, beta, ks, ps, a);
        CHECK(hm == doctest::Approx(delta * hamiltonian(ks, a) + 0.5 * beta * evaluate(ps, a))
                        .epsilon(1e-14));
    }
    PSpinSample wrong = sample_pspin(n + 1, 2, 13);
    Assignment a(static_cast<std::size_t>(n), Spin{1});
    CHECK_THROWS_AS(interpolating_hamiltonian(0.5, delta, beta, ks, wrong, a),
                    std::invalid_argument);
}

TEST_CASE("free_energy wiring against a log-sum-exp oracle") {
    const int n = 8;
    KSatInstance ks = sample_instance(n, 3, 2.0, 21);
    PSpinSample ps = sample_pspin(n, 3, 22);
    const double delta = 0.5, beta = 0.3, t = 0.6;
    GibbsTable tab = free_energy(t, delta, beta, ks, ps);

    auto unsat = unsat_table(ks);
    auto pe = energy_table(ps);
    std::vector<double> energy(unsat.size());
    for (std::size_t i = 0; i < energy.size(); ++i)
        energy[i] = -delta * unsat[i] + std::sqrt(t) * beta * pe[i];
    CHECK(tab.log_z == doctest::Approx(log_sum_exp(energy)).epsilon(1e-13));
    CHECK(tab.phi_sample == doctest::Approx(log_sum_exp(energy) / n).epsilon(1e-13));

    KahanSum w;
    for (double x : tab.weight) w.add(x);
    CHECK(w.value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("free_energy at t=0 ignores the p-spin part") {
    const int n = 7;
    KSatInstance ks = sample_instance(n, 2, 3.0, 31);
    GibbsTable a = free_energy(0.0, 0.5, 0.9, ks, sample_pspin(n, 2, 1));
    GibbsTable b = free_energy(0.0, 0.5, 0.2, ks, sample_pspin(n, 2, 999));
    CHECK(a.log_z == b.log_z);
}

TEST_CASE("single-site instance with no clauses has phi = log 2") {
    KSatInstance ks = sample_instance(1, 2, 0.0, 3);
    REQUIRE(ks.clauses.empty());
    GibbsTable tab = free_energy(0.0, 0.5, 0.0, ks, sample_pspin(1, 2, 4));
    CHECK(tab.log_z == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(tab.phi_sample == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("gibbs_from_energies is shift covariant") {
    std::vector<double> e{0.3, -1.2, 2.0, 0.0, -0.5, 1.1, 0.7, -2.2};
    GibbsTable base = gibbs_from_energies(e, 3);
    const double c = 123.456;
    std::vector<double> shifted = e;
    for (double& x : shifted) x += c;
    GibbsTable moved = gibbs_from_energies(shifted, 3);
    CHECK(moved.log_z == doctest::Approx(base.log_z + c).epsilon(1e-13));
    CHECK(moved.sum_shifted == doctest::Approx(base.sum_shifted).epsilon(1e-12));
    CHECK(moved.max_energy == base.max_energy + c);
    for (std::size_t i = 0; i < base.weight.size(); ++i)
        CHECK(moved.weight[i] == doctest::Approx(base.weight[i]).epsilon(1e-13));
    CHECK_THROWS_AS(gibbs_from_energies(std::vector<double>{1.0, 2.0}, 3),
                    std::invalid_argument);
}

TEST_CASE("sandwich bounds hold on random draws and saturate on flat tables") {
    for (double t : {0.0, 0.5, 1.0}) {
        for (std::uint64_t s = 0; s < 20; ++s) {
            KSatInstance ks = sample_instance(10, 2, 4.0 * (1.0 - t), derive_seed(800, s));
            PSpinSample ps = sample_pspin(10, 2, derive_seed(801, s));
            GibbsTable tab = free_energy(t, 0.5, beta_of(4.0, 0.5, 2), ks, ps);
            SandwichResult r = sandwich_check(tab);
            CHECK(r.lower_ok);
            CHECK(r.upper_ok);
        }
    }
    GibbsTable flat = gibbs_from_energies(std::vector<double>(16, 3.25), 4);
    CHECK(flat.sum_shifted == 16.0);
    SandwichResult r = sandwich_check(flat);
    CHECK(r.lower_ok);
    CHECK(r.upper_ok);
}

TEST_CASE("multi_overlap identities at machine precision") {
    Rng rng(1234);
    const int n = 50;
    for (int trial = 0; trial < 200; ++trial) {
        Assignment a = random_assignment(n, rng);
        Assignment b = random_assignment(n, rng);
        CHECK(multi_overlap({a}) == 0.5);
        double q12 = multi_overlap({a, b});
        double expected = (1.0 + overlap(a, b)) / 4.0;
        CHECK(std::abs(q12 - expected) <= 1e-15);
        CHECK(multi_overlap({a, b}) == multi_overlap({b, a}));
        Assignment fa = a, fb = b;
        for (auto& s : fa) s = static_cast<Spin>(-s);
        for (auto& s : fb) s = static_cast<Spin>(-s);
        CHECK(multi_overlap({fa, fb}) == q12);
    }
    Assignment a = random_assignment(n, rng);
    CHECK(multi_overlap({a, a, a}) == 0.5);
    CHECK_THROWS_AS(multi_overlap({}), std::invalid_argument);
    CHECK_THROWS_AS(multi_overlap({a, Assignment(3, Spin{1})}), std::invalid_argument);
}

TEST_CASE("replica moment expansion matches direct tuple summation") {
    const int n = 6;
    KSatInstance ks = sample_instance(n, 2, 2.0, 55);
    for (int K : {2, 3}) {
        PSpinSample ps = sample_pspin(n, K, 56);
        GibbsTable tab = free_energy(0.5, 0.5, beta_of(2.0, 0.5, K), ks, ps);
        for (int reps = 1; reps <= 3; ++reps) {
            double direct = q_power_avg_direct(tab, K, reps);
            double viamom = q_power_avg_moments(tab, K, reps);
            CHECK(viamom == doctest::Approx(direct).epsilon(1e-11));
        }
    }
    GibbsTable small = gibbs_from_energies(std::vector<double>(4, 0.0), 2);
    CHECK_THROWS_AS(q_power_avg_direct(small, 2, 4), CapacityError);
}

TEST_CASE("first series term is alpha*x/2^K exactly") {
    // <Q^K> for one replica is 2^-K identically, whatever the disorder.
    const int n = 7, K = 2;
    const double alpha = 3.0, delta = 0.8;
    KSatInstance ks = sample_instance(n, K, alpha * 0.5, 61);
    PSpinSample ps = sample_pspin(n, K, 62);
    InterpolationPoint pt = make_point(0.5, alpha, delta, K, n);
    DerivativeTerms dt = derivative_terms(pt, ks, ps);
    const double x = 1.0 - std::exp(-delta);
    CHECK(dt.ii_terms[0] == doctest::Approx(alpha * x / 4.0).epsilon(1e-12));
}

TEST_CASE("term I and the n=2 series term cancel to (beta^2/2) 2^K") {
    // beta is chosen so the <xi(R_12)> pieces of I and II_2 are equal and
    // opposite; their sum collapses to a disorder-independent constant.
    const int n = 8, K = 2;
    const double alpha = 4.0, delta = 0.5;
    InterpolationPoint pt = make_point(0.5, alpha, delta, K, n);
    for (std::uint64_t s = 0; s < 8; ++s) {
        KSatInstance ks = sample_instance(n, K, alpha * 0.5, derive_seed(71, s));
        PSpinSample ps = sample_pspin(n, K, derive_seed(72, s));
        DerivativeTerms dt = derivative_terms(pt, ks, ps);
        const double expected = 0.5 * pt.beta * pt.beta * std::ldexp(1.0, K);
        CHECK(dt.term_i + dt.ii_terms[1] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(dt.term_i >= 0.0);
        for (double term : dt.ii_terms) CHECK(term >= -1e-15);
        CHECK(dt.xi_r_avg <= xi(1.0, K) + 1e-12);
        CHECK(dt.iii_bound ==
              doctest::Approx(alpha * (delta - (1 - std::exp(-delta)) -
                                       0.5 * std::pow(1 - std::exp(-delta), 2)))
                  .epsilon(1e-12));
    }
    KSatInstance ks = sample_instance(n, K, 1.0, 1);
    PSpinSample ps = sample_pspin(n, K, 2);
    CHECK_THROWS_AS(derivative_terms(pt, ks, ps, 1), std::invalid_argument);
}

TEST_CASE("degenerate parameters zero out the right terms") {
    const int n = 6, K = 2;
    KSatInstance empty = sample_instance(n, K, 0.0, 5);
    PSpinSample ps = sample_pspin(n, K, 6);
    InterpolationPoint pt0 = make_point(0.5, 0.0, 0.7, K, n);
    DerivativeTerms d0 = derivative_terms(pt0, empty, ps);
    CHECK(d0.term_i == 0.0);
    CHECK(d0.term_ii == 0.0);
    CHECK(d0.iii_bound == 0.0);

    KSatInstance ks = sample_instance(n, K, 2.0, 7);
    InterpolationPoint ptd = make_point(0.5, 2.0, 0.0, K, n);
    DerivativeTerms dd = derivative_terms(ptd, ks, ps);
    CHECK(dd.term_i == 0.0);
    CHECK(dd.term_ii == 0.0);
    CHECK(dd.iii_bound == 0.0);
}

TEST_CASE("free_energy enforces the enumeration cap") {
    KSatInstance ks = sample_instance(15, 2, 0.5, 1);
    PSpinSample ps = sample_pspin(15, 2, 2);
    CHECK_THROWS_AS(free_energy(0.5, 0.5, 0.1, ks, ps), CapacityError);
}

TEST_CASE("fd_derivative_check validates and passes on a small run") {
    CHECK_THROWS_AS(fd_derivative_check(6, 2, 2.0, 0.5, 0.98, 0.05, 8, 100, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fd_derivative_check(6, 2, 2.0, 0.5, 0.02, 0.05, 8, 100, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(fd_derivative_check(6, 2, 2.0, 0.5, 0.5, 0.05, 8, 1, 1),
                    std::invalid_argument);

    FdCheckResult r = fd_derivative_check(6, 2, 2.0, 0.5, 0.5, 0.05, 8, 600, 314);
    CHECK(r.n_draws == 600);
    CHECK(r.se_fd > 0.0);
    CHECK(r.se_decomp > 0.0);
    CHECK(r.iii_bound > 0.0);
    CHECK(std::abs(r.mean_diff - (r.mean_fd - r.mean_decomp)) < 1e-12);
    CHECK(r.ok);
}

TEST_CASE("fd_derivative_check is thread-count independent") {
    FdCheckResult a = fd_derivative_check(5, 2, 1.5, 0.5, 0.5, 0.05, 6, 80, 77, 1);
    FdCheckResult b = fd_derivative_check(5, 2, 1.5, 0.5, 0.5, 0.05, 6, 80, 77, 4);
    CHECK(a.mean_fd == b.mean_fd);
    CHECK(a.mean_decomp == b.mean_decomp);
    CHECK(a.se_diff == b.se_diff);
}
