#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "satglass/interp.hpp"
#include "satglass/ksat.hpp"
#include "satglass/mc.hpp"
#include "satglass/parisi.hpp"
#include "satglass/pspin.hpp"
#include "satglass/util.hpp"

namespace {

using nlohmann::json;

double now_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Values from --config fill any option the command line left unset.
struct ConfigFile {
    json j = json::object();

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("config: cannot open " + path);
        in >> j;
        if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    }

    template <typename T>
    void fill(const CLI::Option* opt, const char* key, T& target) const {
        if (opt != nullptr && opt->count() > 0) return;
        if (!j.contains(key)) return;
        try {
            target = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument(std::string("config: bad value for ") + key);
        }
    }

    void fill_seed(const CLI::Option* opt, std::uint64_t& target) const {
        if (opt != nullptr && opt->count() > 0) return;
        if (!j.contains("seed")) return;
        const json& s = j.at("seed");
        if (s.is_string())
            target = std::stoull(s.get<std::string>());
        else if (s.is_number_unsigned())
            target = s.get<std::uint64_t>();
        else
            throw std::invalid_argument("config: bad value for seed");
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"K-sat / mixed p-spin numerical laboratory"};
    app.require_subcommand(1);
    std::function<int()> runner;

    // ---- gen ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "sample a K-sat instance to JSON");
    struct {
        int n = 0, k = 0;
        double alpha = -1.0;
        std::uint64_t seed = 1;
        std::string out, config;
    } g;
    auto* gn = gen->add_option("--n", g.n, "variable count");
    auto* gk = gen->add_option("--k", g.k, "clause arity");
    auto* ga = gen->add_option("--alpha", g.alpha, "clause density");
    auto* gs = gen->add_option("--seed", g.seed, "generator seed");
    auto* go = gen->add_option("--out", g.out, "output path (default stdout)");
    gen->add_option("--config", g.config, "JSON config supplying unset flags");
    gen->callback([&] {
        runner = [&]() -> int {
            ConfigFile cfg;
            if (!g.config.empty()) cfg.load(g.config);
            cfg.fill(gn, "n", g.n);
            cfg.fill(gk, "k", g.k);
            cfg.fill(ga, "alpha", g.alpha);
            cfg.fill_seed(gs, g.seed);
            cfg.fill(go, "out", g.out);
            if (g.n < 1) throw std::invalid_argument("n must be >= 1");
            if (g.k < 2) throw std::invalid_argument("k must be >= 2");
            if (!(g.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
            const satglass::KSatInstance inst =
                satglass::sample_instance(g.n, g.k, g.alpha, g.seed);
            write_text(g.out, satglass::to_json(inst).dump(2) + "\n");
            return 0;
        };
    });

    // ---- solve --------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "exact ground state of an instance file");
    struct {
        std::string in, out, config;
        int limit = satglass::kKsatEnumerationCap;
    } s;
    auto* si = solve->add_option("--in", s.in, "instance JSON path");
    auto* sl = solve->add_option("--limit", s.limit, "enumeration cap");
    auto* so = solve->add_option("--out", s.out, "report path (default stdout)");
    solve->add_option("--config", s.config, "JSON config supplying unset flags");
    solve->callback([&] {
        runner = [&]() -> int {
            ConfigFile cfg;
            if (!s.config.empty()) cfg.load(s.config);
            cfg.fill(si, "in", s.in);
            cfg.fill(sl, "limit", s.limit);
            cfg.fill(so, "out", s.out);
            if (s.in.empty()) throw std::invalid_argument("in: instance path is required");
            const satglass::KSatInstance inst =
                satglass::instance_from_json(read_json_file(s.in));
            const auto t0 = std::chrono::steady_clock::now();
            const satglass::GroundState gs_res = satglass::ground_state(inst, s.limit);
            json rep;
            rep["n"] = inst.n;
            rep["k"] = inst.k;
            rep["alpha"] = inst.alpha;
            rep["seed"] = std::to_string(inst.seed);
            rep["m"] = inst.clauses.size();
            rep["min_unsat"] = gs_res.min_unsat;
            rep["m_n_alpha"] = -static_cast<double>(gs_res.min_unsat) / inst.n;
            rep["wall_time_s"] = now_seconds(t0);
            write_text(s.out, rep.dump(2) + "\n");
            return 0;
        };
    });

    // ---- pspin-max ----------------------------------------------------
    auto* pmax = app.add_subcommand("pspin-max", "maximize mixed p-spin draws");
    struct {
        int n = 0, k = 0, samples = 1, threads = 0;
        int limit = satglass::kPSpinEnumerationCap;
        std::uint64_t seed = 1;
        std::string out, config;
    } p;
    auto* pn = pmax->add_option("--n", p.n, "variable count");
    auto* pk = pmax->add_option("--k", p.k, "mixture parameter K");
    auto* pc = pmax->add_option("--samples", p.samples, "disorder draws");
    auto* ps = pmax->add_option("--seed", p.seed, "master seed");
    auto* pt = pmax->add_option("--threads", p.threads, "worker threads (0 = auto)");
    auto* pl = pmax->add_option("--limit", p.limit, "enumeration cap");
    auto* po = pmax->add_option("--out", p.out, "report path (default stdout)");
    pmax->add_option("--config", p.config, "JSON config supplying unset flags");
    pmax->callback([&] {
        runner = [&]() -> int {
            ConfigFile cfg;
            if (!p.config.empty()) cfg.load(p.config);
            cfg.fill(pn, "n", p.n);
            cfg.fill(pk, "k", p.k);
            cfg.fill(pc, "samples", p.samples);
            cfg.fill_seed(ps, p.seed);
            cfg.fill(pt, "threads", p.threads);
            cfg.fill(pl, "limit", p.limit);
            cfg.fill(po, "out", p.out);
            if (p.n < 1) throw std::invalid_argument("n must be >= 1");
            if (p.k < 2) throw std::invalid_argument("k must be >= 2");
            if (p.samples < 1) throw std::invalid_argument("samples must be >= 1");
            const auto t0 = std::chrono::steady_clock::now();
            const satglass::EstimateResult est = satglass::estimate_m_n(
                p.n, p.k, p.samples, p.seed, p.threads, p.limit);
            json rep;
            rep["n"] = p.n;
            rep["k"] = p.k;
            rep["samples"] = est.n_samples;
            rep["seed"] = std::to_string(p.seed);
            rep["mean_m_n"] = est.mean;
            rep["se_m_n"] = est.se;
            rep["wall_time_s"] = now_seconds(t0);
            write_text(p.out, rep.dump(2) + "\n");
            return 0;
        };
    });

    // ---- parisi -------------------------------------------------------
    auto* par = app.add_subcommand("parisi", "evaluate or minimize the Parisi functional");
    struct {
        int k = 3, k_levels = 2, restarts = 8, gh_nodes = 64, threads = 0;
        double h_x = 1.0 / 64.0, x_max = 0.0;
        bool minimize = false;
        std::uint64_t seed = 1;
        std::string u_path, out, config;
    } q;
    auto* qk = par->add_option("--k", q.k, "mixture parameter K");
    auto* qu = par->add_option("--u", q.u_path, "step function JSON to evaluate");
    auto* qm = par->add_flag("--minimize", q.minimize, "minimize over k-level step functions");
    auto* ql = par->add_option("--k-levels", q.k_levels, "interior jumps for --minimize");
    auto* qr = par->add_option("--restarts", q.restarts, "optimizer restarts");
    auto* qg = par->add_option("--gh-nodes", q.gh_nodes, "Gauss-Hermite nodes");
    auto* qh = par->add_option("--h-x", q.h_x, "spatial grid spacing");
    auto* qx = par->add_option("--x-max", q.x_max, "grid half-width (0 = auto)");
    auto* qs = par->add_option("--seed", q.seed, "optimizer seed");
    auto* qt = par->add_option("--threads", q.threads, "worker threads (0 = auto)");
    auto* qo = par->add_option("--out", q.out, "report path (default stdout)");
    par->add_option("--config", q.config, "JSON config supplying unset flags");
    par->callback([&] {
        runner = [&]() -> int {
            ConfigFile cfg;
            if (!q.config.empty()) cfg.load(q.config);
            cfg.fill(qk, "k", q.k);
            cfg.fill(qu, "u", q.u_path);
            if (qm->count() == 0 && cfg.j.contains("minimize"))
                q.minimize = cfg.j.at("minimize").get<bool>();
            cfg.fill(ql, "k_levels", q.k_levels);
            cfg.fill(qr, "restarts", q.restarts);
            cfg.fill(qg, "gh_nodes", q.gh_nodes);
            cfg.fill(qh, "h_x", q.h_x);
            cfg.fill(qx, "x_max", q.x_max);
            cfg.fill_seed(qs, q.seed);
            cfg.fill(qt, "threads", q.threads);
            cfg.fill(qo, "out", q.out);
            if (q.k < 2) throw std::invalid_argument("k must be >= 2");
            satglass::GridConfig grid;
            grid.x_max = q.x_max;
            grid.h_x = q.h_x;
            grid.gh_nodes = q.gh_nodes;
            json rep;
            rep["grid"] = {{"x_max", grid.x_max},
                           {"h_x", grid.h_x},
                           {"gh_nodes", grid.gh_nodes}};
            const auto t0 = std::chrono::steady_clock::now();
            if (!q.u_path.empty() && !q.minimize) {
                const satglass::StepFunction u =
                    satglass::step_from_json(read_json_file(q.u_path));
                const satglass::ParisiValue v = satglass::parisi_functional(u, q.k, grid);
                rep["k"] = q.k;
                rep["psi00"] = v.psi00;
                rep["correction"] = v.correction;
                rep["value"] = v.p_of_u;
            } else if (q.minimize && q.u_path.empty()) {
                if (q.k_levels < 0) throw std::invalid_argument("k_levels must be >= 0");
                satglass::MinimizeConfig mc;
                mc.grid = grid;
                mc.restarts = q.restarts;
                mc.n_threads = q.threads;
                const satglass::MinimizeResult r =
                    satglass::minimize_parisi(q.k, q.k_levels, mc, q.seed);
                rep["k"] = q.k;
                rep["k_levels"] = q.k_levels;
                rep["p_star"] = r.p_star;
                rep["u_star"] = {{"breakpoints", r.u_star.ts}, {"values", r.u_star.ms}};
                rep["converged"] = r.converged;
                rep["n_evals"] = r.n_evals;
                rep["seed"] = std::to_string(q.seed);
            } else {
                throw std::invalid_argument("u/minimize: pass exactly one of --u or --minimize");
            }
            rep["wall_time_s"] = now_seconds(t0);
            write_text(q.out, rep.dump(2) + "\n");
            return 0;
        };
    });

    // ---- verify-theorem1 ----------------------------------------------
    auto* ver = app.add_subcommand("verify-theorem1", "residual sweep over alpha");
    struct {
        int n = 12, k = 2, samples = 2000, threads = 0;
        std::vector<double> alphas{16.0, 64.0, 256.0, 1024.0};
        std::uint64_t seed = 1;
        std::string out, config;
    } v;
    auto* vn = ver->add_option("--n", v.n, "variable count");
    auto* vk = ver->add_option("--k", v.k, "clause arity");
    auto* va = ver->add_option("--alphas", v.alphas, "alpha grid")->delimiter(',');
    auto* vc = ver->add_option("--samples", v.samples, "disorder draws per estimate");
    auto* vs = ver->add_option("--seed", v.seed, "master seed");
    auto* vt = ver->add_option("--threads", v.threads, "worker threads (0 = auto)");
    auto* vo = ver->add_option("--out", v.out, "CSV path (default stdout)");
    ver->add_option("--config", v.config, "JSON config supplying unset flags");
    ver->callback([&] {
        runner = [&]() -> int {
            ConfigFile cfg;
            if (!v.config.empty()) cfg.load(v.config);
            cfg.fill(vn, "n", v.n);
            cfg.fill(vk, "k", v.k);
            cfg.fill(va, "alphas", v.alphas);
            cfg.fill(vc, "samples", v.samples);
            cfg.fill_seed(vs, v.seed);
            cfg.fill(vt, "threads", v.threads);
            cfg.fill(vo, "out", v.out);
            if (v.n < 1) throw std::invalid_argument("n must be >= 1");
            if (v.k < 2) throw std::invalid_argument("k must be >= 2");
            if (v.samples < 1) throw std::invalid_argument("samples must be >= 1");
            for (double a : v.alphas)
                if (!(a >= 0.0)) throw std::invalid_argument("alphas must be >= 0");
            const satglass::SweepResult sw = satglass::residual_sweep(
                v.n, v.k, v.alphas, v.samples, v.seed, v.threads);
            write_text(v.out, satglass::sweep_csv(sw));
            const satglass::Theorem1Checks ck = satglass::check_theorem1(sw, v.k);
            std::ostringstream sum;
            sum << "summary:";
            if (sw.fit_valid)
                sum << " fitted_exponent=" << sw.fitted_exponent;
            else
                sum << " fitted_exponent=n/a (fewer than 2 points above noise)";
            sum << " ratio_decreasing=" << (ck.ratio_decreasing ? "PASS" : "FAIL")
                << " exponent_lt_half=" << (ck.exponent_ok ? "PASS" : "FAIL")
                << " endpoint_within_15pct=" << (ck.endpoint_ok ? "PASS" : "FAIL")
                << " (rel_err=" << ck.endpoint_rel_err << ")\n";
            std::cout << sum.str();
            return 0;
        };
    });

    // ---- interp-check -------------------------------------------------
    auto* ich = app.add_subcommand("interp-check", "finite-difference check of phi'(t)");
    struct {
        int n = 8, k = 2, draws = 5000, truncation = 8, threads = 0;
        double alpha = 2.0, delta = 0.5, t = 0.5, h = 0.05;
        std::uint64_t seed = 1;
        std::string out, config;
    } ic;
    auto* in_ = ich->add_option("--n", ic.n, "variable count");
    auto* ik = ich->add_option("--k", ic.k, "clause arity");
    auto* ia = ich->add_option("--alpha", ic.alpha, "clause density");
    auto* id = ich->add_option("--delta", ic.delta, "k-sat inverse temperature");
    auto* it = ich->add_option("--t", ic.t, "interpolation parameter");
    auto* ih = ich->add_option("--fd-step", ic.h, "finite-difference step");
    auto* iw = ich->add_option("--draws", ic.draws, "disorder draws");
    auto* iu = ich->add_option("--truncation", ic.truncation, "II series cutoff");
    auto* is = ich->add_option("--seed", ic.seed, "master seed");
    auto* ix = ich->add_option("--threads", ic.threads, "worker threads (0 = auto)");
    auto* io = ich->add_option("--out", ic.out, "report path (default stdout)");
    ich->add_option("--config", ic.config, "JSON config supplying unset flags");
    ich->callback([&] {
        runner = [&]() -> int {
            ConfigFile cfg;
            if (!ic.config.empty()) cfg.load(ic.config);
            cfg.fill(in_, "n", ic.n);
            cfg.fill(ik, "k", ic.k);
            cfg.fill(ia, "alpha", ic.alpha);
            cfg.fill(id, "delta", ic.delta);
            cfg.fill(it, "t", ic.t);
            cfg.fill(ih, "fd_step", ic.h);
            cfg.fill(iw, "draws", ic.draws);
            cfg.fill(iu, "truncation", ic.truncation);
            cfg.fill_seed(is, ic.seed);
            cfg.fill(ix, "threads", ic.threads);
            cfg.fill(io, "out", ic.out);
            if (ic.n < 1) throw std::invalid_argument("n must be >= 1");
            if (ic.k < 2) throw std::invalid_argument("k must be >= 2");
            if (!(ic.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
            if (!(ic.delta > 0.0)) throw std::invalid_argument("delta must be > 0");
            const auto t0 = std::chrono::steady_clock::now();
            const satglass::FdCheckResult r = satglass::fd_derivative_check(
                ic.n, ic.k, ic.alpha, ic.delta, ic.t, ic.h, ic.truncation,
                ic.draws, ic.seed, ic.threads);
            json rep;
            rep["n"] = ic.n;
            rep["k"] = ic.k;
            rep["alpha"] = ic.alpha;
            rep["delta"] = ic.delta;
            rep["t"] = ic.t;
            rep["fd_step"] = ic.h;
            rep["draws"] = r.n_draws;
            rep["seed"] = std::to_string(ic.seed);
            rep["mean_fd"] = r.mean_fd;
            rep["se_fd"] = r.se_fd;
            rep["mean_decomp"] = r.mean_decomp;
            rep["se_decomp"] = r.se_decomp;
            rep["mean_diff"] = r.mean_diff;
            rep["se_diff"] = r.se_diff;
            rep["iii_bound"] = r.iii_bound;
            rep["ok"] = r.ok;
            rep["wall_time_s"] = now_seconds(t0);
            write_text(ic.out, rep.dump(2) + "\n");
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        return runner();
    } catch (const satglass::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
