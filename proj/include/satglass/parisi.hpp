#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "satglass/pspin.hpp"  // xi and derivatives, CapacityError

namespace satglass {

/// Nonnegative nondecreasing step function on [0,1]: value ms[j] on
/// [ts[j], ts[j+1]), right-continuous, ts runs 0 = t_0 < ... < t_{k+1} = 1.
struct StepFunction {
    std::vector<double> ts;  // k+2 breakpoints including both endpoints
    std::vector<double> ms;  // k+1 interval values

    void validate() const;
    double value_at(double t) const;
    int levels() const { return static_cast<int>(ms.size()) - 1; }

    static StepFunction constant(double m);
    /// Same function, one redundant breakpoint added inside an interval.
    StepFunction refined(double t_new) const;
};

nlohmann::json to_json(const StepFunction& u);
StepFunction step_from_json(const nlohmann::json& j);

struct GridConfig {
    double x_max = 0.0;      // <= 0 picks 8*sqrt(xi'(1)) + 4
    double h_x = 1.0 / 64.0;
    int gh_nodes = 64;
    double fd_dt = 2.5e-4;   // Crank-Nicolson target step
    int fd_rannacher = 4;    // backward-Euler half-steps at the kink
};

struct GaussHermite {
    std::vector<double> nodes;    // physicists' rule, weight e^{-x^2}
    std::vector<double> weights;  // sum of weights = sqrt(pi)
};

GaussHermite gauss_hermite(int n);

/// E |x + s Z| in closed form.
double expected_abs_gauss(double x, double s);
/// log E exp(m |x + s Z|) in closed form, robust for large m*x.
double log_mgf_abs_gauss(double m, double x, double s);

/// Solution slices at every breakpoint time; linear tails |x| + offset
/// outside [-x_max, x_max].
struct PsiGrid {
    std::vector<double> xs;
    double h_x = 0.0;
    double x_max = 0.0;
    std::vector<double> times;              // ascending, = u.ts
    std::vector<std::vector<double>> psi;   // psi[j] at times[j]
    std::vector<double> tail_offset;        // per stored time
    double psi00 = 0.0;

    double at(std::size_t time_idx, double x) const;  // cubic + linear tail
};

/// Backward recursion, exact in time: on each constant-m interval the
/// Cole-Hopf transform turns the PDE into Gaussian smoothing, so
/// Psi(a,x) = (1/m) log E exp(m Psi(b, x + s Z)), s^2 = xi'(b) - xi'(a).
/// The boundary interval is evaluated from the closed forms above (the |x|
/// kink defeats quadrature); later intervals use Gauss-Hermite.
PsiGrid solve_cole_hopf(const StepFunction& u, int K, const GridConfig& cfg = {});

/// Independent cross-check: Crank-Nicolson on the semilinear PDE with the
/// gradient term lagged, Rannacher start-up, Dirichlet linear-tail boundary.
double solve_pde_fd(const StepFunction& u, int K, const GridConfig& cfg = {});

/// (1/2) int_0^1 t xi''(t) u(t) dt, closed form via [t xi' - xi] per interval.
double correction_integral(const StepFunction& u, int K);

struct ParisiValue {
    double psi00 = 0.0;
    double correction = 0.0;
    double p_of_u = 0.0;  // psi00 - correction
};

ParisiValue parisi_functional(const StepFunction& u, int K, const GridConfig& cfg = {});

struct MinimizeConfig {
    GridConfig grid;
    int restarts = 8;
    int max_iter = 400;
    double simplex_tol = 1e-6;
    double init_step = 0.25;
    int n_threads = 0;
};

struct MinimizeResult {
    StepFunction u_star;
    double p_star = 0.0;
    bool converged = false;  // every contributing start met the simplex tol
    long long n_evals = 0;
};

/// Nelder-Mead over an unconstrained reparameterization (sorted logistic
/// breakpoints, cumulative softplus values), multi-start; start 0 embeds the
/// recursively computed (k-1)-level minimizer, which makes the reported
/// values non-increasing in k_levels by construction.
MinimizeResult minimize_parisi(int K, int k_levels, const MinimizeConfig& cfg,
                               std::uint64_t seed);

}  // namespace satglass
