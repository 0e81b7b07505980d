#include "satglass/parisi.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "satglass/rng.hpp"
#include "satglass/util.hpp"

namespace satglass {

namespace {

constexpr double kSmallM = 1e-6;   // below this, use the m->0 expansion
constexpr double kPi = 3.14159265358979323846;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double inv_softplus(double y) {
    if (y > 30.0) return y;
    if (y < 1e-13) return -30.0;
    return std::log(std::expm1(y));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void StepFunction::validate() const {
    if (ts.size() < 2 || ms.size() + 1 != ts.size())
        throw std::invalid_argument("step function needs k+2 breakpoints and k+1 values");
    if (ts.front() != 0.0 || ts.back() != 1.0)
        throw std::invalid_argument("breakpoints must start at 0 and end at 1");
    for (std::size_t j = 1; j < ts.size(); ++j)
        if (!(ts[j] > ts[j - 1]))
            throw std::invalid_argument("breakpoints must be strictly increasing");
    if (!(ms.front() >= 0.0))
        throw std::invalid_argument("values must be nonnegative");
    for (std::size_t j = 1; j < ms.size(); ++j)
        if (!(ms[j] >= ms[j - 1]))
            throw std::invalid_argument("values must be nondecreasing");
}

double StepFunction::value_at(double t) const {
    if (t >= 1.0) return ms.back();
    std::size_t j = 0;
    while (j + 1 < ms.size() && t >= ts[j + 1]) ++j;
    return ms[j];
}

StepFunction StepFunction::constant(double m) {
    return StepFunction{{0.0, 1.0}, {m}};
}

StepFunction StepFunction::refined(double t_new) const {
    StepFunction r = *this;
    for (std::size_t j = 0; j + 1 < ts.size(); ++j) {
        if (t_new > ts[j] && t_new < ts[j + 1]) {
            r.ts.insert(r.ts.begin() + static_cast<std::ptrdiff_t>(j) + 1, t_new);
            r.ms.insert(r.ms.begin() + static_cast<std::ptrdiff_t>(j), ms[j]);
            return r;
        }
    }
    throw std::invalid_argument("refinement point must lie strictly inside an interval");
}

nlohmann::json to_json(const StepFunction& u) {
    return nlohmann::json{{"breakpoints", u.ts}, {"values", u.ms}};
}

StepFunction step_from_json(const nlohmann::json& j) {
    StepFunction u;
    try {
        u.ts = j.at("breakpoints").get<std::vector<double>>();
        u.ms = j.at("values").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("step function json needs numeric arrays "
                                    "\"breakpoints\" and \"values\"");
    }
    u.validate();
    return u;
}

GaussHermite gauss_hermite(int n) {
    if (n < 8) throw std::invalid_argument("gauss_hermite: need at least 8 nodes");
    GaussHermite gh;
    gh.nodes.resize(static_cast<std::size_t>(n));
    gh.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * gh.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * gh.nodes[1];
        } else {
            z = 2.0 * z - gh.nodes[static_cast<std::size_t>(i) - 2];
        }
        for (int it = 0; it < 100; ++it) {
            double p1 = 0.7511255444649425;  // pi^{-1/4}
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-14) break;
        }
        gh.nodes[static_cast<std::size_t>(i)] = z;
        gh.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
        gh.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        gh.weights[static_cast<std::size_t>(n - 1 - i)] = gh.weights[static_cast<std::size_t>(i)];
    }
    return gh;
}

double expected_abs_gauss(double x, double s) {
    if (!(s > 0.0)) return std::abs(x);
    const double r = x / s;
    return s * std::sqrt(2.0 / kPi) * std::exp(-0.5 * r * r) +
           x * std::erf(r / std::sqrt(2.0));
}

double log_mgf_abs_gauss(double m, double x, double s) {
    if (!(s > 0.0)) return m * std::abs(x);
    const double r = x / s;
    const double a = m * x + log_norm_cdf(m * s + r);
    const double b = -m * x + log_norm_cdf(m * s - r);
    const double hi = std::max(a, b);
    return 0.5 * m * m * s * s + hi + std::log1p(std::exp(std::min(a, b) - hi));
}

namespace {

// 4-point Lagrange interpolation on the uniform grid, linear tail outside.
double slice_eval(const std::vector<double>& f, double x_max, double h,
                  double offset, double z) {
    if (z >= x_max || z <= -x_max) return std::abs(z) + offset;
    const auto npts = static_cast<long>(f.size());
    const double uu = (z + x_max) / h;
    long base = static_cast<long>(std::floor(uu)) - 1;
    base = std::max(0L, std::min(base, npts - 4));
    const double t = uu - static_cast<double>(base + 1);
    const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double w2 = -t * (t + 1.0) * (t - 2.0) / 2.0;
    const double w3 = t * (t + 1.0) * (t - 1.0) / 6.0;
    const std::size_t b = static_cast<std::size_t>(base);
    return w0 * f[b] + w1 * f[b + 1] + w2 * f[b + 2] + w3 * f[b + 3];
}

double auto_x_max(const GridConfig& cfg, int K) {
    return cfg.x_max > 0.0 ? cfg.x_max : 8.0 * std::sqrt(xi_prime(1.0, K)) + 4.0;
}

void check_grid(const GridConfig& cfg) {
    if (!(cfg.h_x > 0.0) || !(auto_x_max(cfg, 2) > cfg.h_x))
        throw std::invalid_argument("degenerate grid: need 0 < h_x < x_max");
    if (cfg.gh_nodes < 8)
        throw std::invalid_argument("quadrature node count must be >= 8");
}

}  // namespace

double PsiGrid::at(std::size_t time_idx, double x) const {
    return slice_eval(psi.at(time_idx), x_max, h_x, tail_offset.at(time_idx), x);
}

PsiGrid solve_cole_hopf(const StepFunction& u, int K, const GridConfig& cfg) {
    u.validate();
    if (K < 2) throw std::invalid_argument("K must be >= 2");
    check_grid(cfg);
    PsiGrid g;
    g.h_x = cfg.h_x;
    const int half = static_cast<int>(std::ceil(auto_x_max(cfg, K) / cfg.h_x));
    g.x_max = half * cfg.h_x;
    const int npts = 2 * half + 1;
    g.xs.resize(static_cast<std::size_t>(npts));
    for (int i = 0; i < npts; ++i) g.xs[static_cast<std::size_t>(i)] = (i - half) * cfg.h_x;
    g.times = u.ts;
    const std::size_t nt = g.times.size();
    g.psi.resize(nt);
    g.tail_offset.assign(nt, 0.0);
    g.psi[nt - 1].resize(static_cast<std::size_t>(npts));
    for (int i = 0; i < npts; ++i)
        g.psi[nt - 1][static_cast<std::size_t>(i)] = std::abs(g.xs[static_cast<std::size_t>(i)]);

    const GaussHermite gh = gauss_hermite(cfg.gh_nodes);
    const std::size_t q = gh.nodes.size();
    std::vector<double> vals(q);
    const double log_sqrt_pi = 0.5 * std::log(kPi);

    for (std::size_t j = nt - 1; j >= 1; --j) {
        const double s2 = xi_prime(g.times[j], K) - xi_prime(g.times[j - 1], K);
        const double m = u.ms[j - 1];
        if (!(s2 > 0.0)) {
            g.psi[j - 1] = g.psi[j];
            g.tail_offset[j - 1] = g.tail_offset[j];
            continue;
        }
        const double s = std::sqrt(s2);
        std::vector<double>& out = g.psi[j - 1];
        out.resize(static_cast<std::size_t>(npts));
        const bool boundary = (j == nt - 1);
        for (int i = 0; i < npts; ++i) {
            const double x = g.xs[static_cast<std::size_t>(i)];
            if (boundary) {
                // the |x| kink defeats quadrature here; use closed forms
                if (m > kSmallM) {
                    out[static_cast<std::size_t>(i)] = log_mgf_abs_gauss(m, x, s) / m;
                } else {
                    const double mean = expected_abs_gauss(x, s);
                    out[static_cast<std::size_t>(i)] =
                        mean + 0.5 * m * (x * x + s2 - mean * mean);
                }
            } else {
                const std::vector<double>& prev = g.psi[j];
                const double off = g.tail_offset[j];
                for (std::size_t qq = 0; qq < q; ++qq)
                    vals[qq] = slice_eval(prev, g.x_max, g.h_x, off,
                                          x + s * std::sqrt(2.0) * gh.nodes[qq]);
                if (m > kSmallM) {
                    double amax = -std::numeric_limits<double>::infinity();
                    for (std::size_t qq = 0; qq < q; ++qq)
                        amax = std::max(amax, m * vals[qq]);
                    KahanSum sum;
                    for (std::size_t qq = 0; qq < q; ++qq)
                        sum.add(gh.weights[qq] * std::exp(m * vals[qq] - amax));
                    out[static_cast<std::size_t>(i)] =
                        (amax + std::log(sum.value()) - log_sqrt_pi) / m;
                } else {
                    KahanSum s1, sq;
                    for (std::size_t qq = 0; qq < q; ++qq) {
                        s1.add(gh.weights[qq] * vals[qq]);
                        sq.add(gh.weights[qq] * vals[qq] * vals[qq]);
                    }
                    const double mean = s1.value() / std::sqrt(kPi);
                    const double m2 = sq.value() / std::sqrt(kPi);
                    out[static_cast<std::size_t>(i)] = mean + 0.5 * m * (m2 - mean * mean);
                }
            }
        }
        g.tail_offset[j - 1] = g.tail_offset[j] + 0.5 * m * s2;
    }
    g.psi00 = g.psi[0][static_cast<std::size_t>(half)];
    return g;
}

namespace {

// (1/2) int_t^1 xi''(r) u(r) dr: the linear-tail offset at time t.
double tail_offset_at(const StepFunction& u, int K, double t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < u.ms.size(); ++j) {
        const double lo = std::max(u.ts[j], t);
        const double hi = u.ts[j + 1];
        if (lo < hi) acc += u.ms[j] * (xi_prime(hi, K) - xi_prime(lo, K));
    }
    return 0.5 * acc;
}

void thomas_solve(std::vector<double>& diag, std::vector<double>& rhs, double off) {
    // constant off-diagonals; diag and rhs are overwritten
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = off / diag[i - 1];
        diag[i] -= w * off;
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - off * rhs[i + 1]) / diag[i];
}

}  // namespace

double solve_pde_fd(const StepFunction& u, int K, const GridConfig& cfg) {
    u.validate();
    if (K < 2) throw std::invalid_argument("K must be >= 2");
    check_grid(cfg);
    if (!(cfg.fd_dt > 0.0) || cfg.fd_dt > 0.05)
        throw std::invalid_argument("fd_dt must lie in (0, 0.05]");
    const int half = static_cast<int>(std::ceil(auto_x_max(cfg, K) / cfg.h_x));
    const double x_max = half * cfg.h_x;
    const double h = cfg.h_x;
    const int npts = 2 * half + 1;
    std::vector<double> psi(static_cast<std::size_t>(npts));
    for (int i = 0; i < npts; ++i)
        psi[static_cast<std::size_t>(i)] = std::abs((i - half) * h);

    const std::size_t inner = static_cast<std::size_t>(npts) - 2;
    std::vector<double> diag(inner), rhs(inner);
    double tau = 0.0;
    int rannacher_left = std::max(0, cfg.fd_rannacher);

    // March tau = 1-t from 0 to 1; advance one implicit step of size dt with
    // the gradient term lagged. cn=false is backward Euler (start-up).
    auto advance = [&](double dt, double m, bool cn) {
        const double tm = 1.0 - (tau + 0.5 * dt);
        const double c = xi_second(tm, K);
        const double r = cn ? c * dt / (4.0 * h * h) : c * dt / (2.0 * h * h);
        const double bound = x_max + tail_offset_at(u, K, 1.0 - (tau + dt));
        for (std::size_t i = 0; i < inner; ++i) {
            const double grad = (psi[i + 2] - psi[i]) / (2.0 * h);
            double b = psi[i + 1] + dt * 0.5 * c * m * grad * grad;
            if (cn) b += r * (psi[i] - 2.0 * psi[i + 1] + psi[i + 2]);
            diag[i] = 1.0 + 2.0 * r;
            rhs[i] = b;
        }
        rhs[0] += r * bound;
        rhs[inner - 1] += r * bound;
        thomas_solve(diag, rhs, -r);
        psi.front() = bound;
        psi.back() = bound;
        for (std::size_t i = 0; i < inner; ++i) psi[i + 1] = rhs[i];
        tau += dt;
    };

    const std::size_t k1 = u.ms.size();
    for (std::size_t j = k1; j-- > 0;) {  // intervals in ascending tau
        const double len = u.ts[j + 1] - u.ts[j];
        const double m = u.ms[j];
        const auto nsteps = static_cast<long>(std::ceil(len / cfg.fd_dt));
        const double dt = len / static_cast<double>(nsteps);
        for (long q = 0; q < nsteps; ++q) {
            if (rannacher_left > 0) {
                advance(0.5 * dt, m, false);
                advance(0.5 * dt, m, false);
                rannacher_left -= 2;
            } else {
                advance(dt, m, true);
            }
        }
    }
    const double psi00 = psi[static_cast<std::size_t>(half)];
    if (!std::isfinite(psi00))
        throw std::runtime_error("solve_pde_fd: non-finite solution (step size too large?)");
    return psi00;
}

double correction_integral(const StepFunction& u, int K) {
    u.validate();
    // int_a^b t xi''(t) dt = [t xi'(t) - xi(t)]_a^b
    auto f = [K](double t) { return t * xi_prime(t, K) - xi(t, K); };
    double acc = 0.0;
    for (std::size_t j = 0; j < u.ms.size(); ++j)
        acc += u.ms[j] * (f(u.ts[j + 1]) - f(u.ts[j]));
    return 0.5 * acc;
}

ParisiValue parisi_functional(const StepFunction& u, int K, const GridConfig& cfg) {
    ParisiValue v;
    v.psi00 = solve_cole_hopf(u, K, cfg).psi00;
    v.correction = correction_integral(u, K);
    v.p_of_u = v.psi00 - v.correction;
    return v;
}

namespace {

StepFunction decode_params(const std::vector<double>& th, int k) {
    StepFunction u;
    u.ts.resize(static_cast<std::size_t>(k) + 2);
    u.ms.resize(static_cast<std::size_t>(k) + 1);
    u.ts.front() = 0.0;
    u.ts.back() = 1.0;
    std::vector<double> bp(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) bp[static_cast<std::size_t>(j)] = logistic(th[static_cast<std::size_t>(j)]);
    std::sort(bp.begin(), bp.end());
    double prev = 0.0;
    for (int j = 0; j < k; ++j) {
        const double lo = prev + 1e-9;
        const double hi = 1.0 - 1e-9 * (k - j);
        const double t = std::min(std::max(bp[static_cast<std::size_t>(j)], lo), hi);
        u.ts[static_cast<std::size_t>(j) + 1] = t;
        prev = t;
    }
    double m = 0.0;
    for (int j = 0; j <= k; ++j) {
        m += softplus(th[static_cast<std::size_t>(k + j)]);
        u.ms[static_cast<std::size_t>(j)] = m;
    }
    return u;
}

std::vector<double> encode_params(const StepFunction& u) {
    const int k = u.levels();
    std::vector<double> th(static_cast<std::size_t>(2 * k) + 1);
    for (int j = 0; j < k; ++j)
        th[static_cast<std::size_t>(j)] = logit(u.ts[static_cast<std::size_t>(j) + 1]);
    double prev = 0.0;
    for (int j = 0; j <= k; ++j) {
        th[static_cast<std::size_t>(k + j)] = inv_softplus(u.ms[static_cast<std::size_t>(j)] - prev);
        prev = u.ms[static_cast<std::size_t>(j)];
    }
    return th;
}

struct NmOutcome {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false;
    long long evals = 0;
};

template <typename F>
NmOutcome nelder_mead(F&& fn, const std::vector<double>& x0, double step,
                      double tol, int max_iter) {
    const std::size_t dim = x0.size();
    NmOutcome out;
    std::vector<std::vector<double>> vx(dim + 1, x0);
    std::vector<double> vf(dim + 1);
    for (std::size_t i = 0; i < dim; ++i) vx[i + 1][i] += step;
    for (std::size_t i = 0; i <= dim; ++i) {
        vf[i] = fn(vx[i]);
        ++out.evals;
    }
    std::vector<std::size_t> ord(dim + 1);
    std::vector<double> cen(dim), xr(dim), xe(dim), xc(dim);
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i <= dim; ++i) ord[i] = i;
        std::stable_sort(ord.begin(), ord.end(),
                         [&](std::size_t a, std::size_t b) { return vf[a] < vf[b]; });
        const std::size_t best = ord[0], worst = ord[dim], second = ord[dim - 1];
        double diam = 0.0;
        for (std::size_t i = 0; i <= dim; ++i)
            for (std::size_t d = 0; d < dim; ++d)
                diam = std::max(diam, std::abs(vx[i][d] - vx[best][d]));
        if (diam < tol) {
            out.converged = true;
            break;
        }
        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i <= dim; ++i)
                if (i != worst) s += vx[i][d];
            cen[d] = s / static_cast<double>(dim);
        }
        for (std::size_t d = 0; d < dim; ++d) xr[d] = cen[d] + (cen[d] - vx[worst][d]);
        const double fr = fn(xr);
        ++out.evals;
        if (fr < vf[best]) {
            for (std::size_t d = 0; d < dim; ++d) xe[d] = cen[d] + 2.0 * (cen[d] - vx[worst][d]);
            const double fe = fn(xe);
            ++out.evals;
            if (fe < fr) {
                vx[worst] = xe;
                vf[worst] = fe;
            } else {
                vx[worst] = xr;
                vf[worst] = fr;
            }
        } else if (fr < vf[second]) {
            vx[worst] = xr;
            vf[worst] = fr;
        } else {
            const bool outside = fr < vf[worst];
            for (std::size_t d = 0; d < dim; ++d)
                xc[d] = outside ? cen[d] + 0.5 * (xr[d] - cen[d])
                                : cen[d] + 0.5 * (vx[worst][d] - cen[d]);
            const double fc = fn(xc);
            ++out.evals;
            if (fc < std::min(fr, vf[worst])) {
                vx[worst] = xc;
                vf[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < dim; ++d)
                        vx[i][d] = vx[best][d] + 0.5 * (vx[i][d] - vx[best][d]);
                    vf[i] = fn(vx[i]);
                    ++out.evals;
                }
            }
        }
    }
    std::size_t arg = 0;
    for (std::size_t i = 1; i <= dim; ++i)
        if (vf[i] < vf[arg]) arg = i;
    out.x = vx[arg];
    out.f = vf[arg];
    return out;
}

}  // namespace

MinimizeResult minimize_parisi(int K, int k_levels, const MinimizeConfig& cfg,
                               std::uint64_t seed) {
    if (k_levels < 0) throw std::invalid_argument("k_levels must be >= 0");
    if (cfg.restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    const int dim = 2 * k_levels + 1;
    auto objective = [&](const std::vector<double>& th) {
        return parisi_functional(decode_params(th, k_levels), K, cfg.grid).p_of_u;
    };

    std::vector<std::vector<double>> starts;
    long long sub_evals = 0;
    if (k_levels >= 1) {
        // warm start: refine the (k-1)-level minimizer; a redundant level
        // keeps the value, so the reported minimum cannot go up with k
        MinimizeConfig sub_cfg = cfg;
        const MinimizeResult sub = minimize_parisi(K, k_levels - 1, sub_cfg,
                                                   derive_seed(seed, 0x9e3779b9ULL));
        sub_evals = sub.n_evals;
        const StepFunction& v = sub.u_star;
        std::size_t widest = 0;
        for (std::size_t j = 1; j < v.ms.size(); ++j)
            if (v.ts[j + 1] - v.ts[j] > v.ts[widest + 1] - v.ts[widest]) widest = j;
        starts.push_back(encode_params(
            v.refined(0.5 * (v.ts[widest] + v.ts[widest + 1]))));
    }
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r) + 1));
        std::vector<double> th(static_cast<std::size_t>(dim));
        for (int j = 0; j < k_levels; ++j) th[static_cast<std::size_t>(j)] = 1.25 * rng.gaussian();
        for (int j = 0; j <= k_levels; ++j)
            th[static_cast<std::size_t>(k_levels + j)] = rng.gaussian() - 0.5;
        starts.push_back(std::move(th));
    }

    std::vector<NmOutcome> outcomes(starts.size());
    parallel_for(starts.size(), cfg.n_threads, [&](std::size_t s) {
        outcomes[s] = nelder_mead(objective, starts[s], cfg.init_step,
                                  cfg.simplex_tol, cfg.max_iter);
    });

    std::size_t bi = 0;
    long long evals = sub_evals;
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        evals += outcomes[s].evals;
        if (outcomes[s].f < outcomes[bi].f) bi = s;
    }
    MinimizeResult res;
    res.u_star = decode_params(outcomes[bi].x, k_levels);
    res.p_star = outcomes[bi].f;
    res.converged = outcomes[bi].converged;
    res.n_evals = evals;
    return res;
}

}  // namespace satglass
