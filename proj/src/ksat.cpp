#include "satglass/ksat.hpp"

#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

#include "satglass/rng.hpp"
#include "satglass/util.hpp"

namespace satglass {

void KSatInstance::validate() const {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    for (const Clause& c : clauses) {
        if (static_cast<int>(c.indices.size()) != k ||
            static_cast<int>(c.signs.size()) != k)
            throw std::invalid_argument("clauses: literal count must equal k");
        for (std::int32_t idx : c.indices)
            if (idx < 1 || idx > n)
                throw std::invalid_argument("clauses: index out of range 1..n");
        for (Spin s : c.signs)
            if (s != 1 && s != -1)
                throw std::invalid_argument("clauses: signs must be +1 or -1");
    }
}

KSatInstance sample_instance(int n, int k, double alpha, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");

    KSatInstance inst;
    inst.n = n;
    inst.k = k;
    inst.alpha = alpha;
    inst.seed = seed;

    Rng rng(seed);
    // Stream order is part of the contract: clause count first, then for each
    // clause all k indices followed by all k signs. With the single-uniform
    // inversion sampler below its threshold, two instances drawn at the same
    // seed but different alpha share their clause prefix.
    std::uint64_t m = rng.poisson(alpha * n);
    inst.clauses.resize(m);
    for (Clause& c : inst.clauses) {
        c.indices.resize(k);
        c.signs.resize(k);
        for (int j = 0; j < k; ++j)
            c.indices[j] = static_cast<std::int32_t>(1 + rng.below(static_cast<std::uint64_t>(n)));
        for (int j = 0; j < k; ++j) c.signs[j] = rng.sign_pm1();
    }
    return inst;
}

int clause_unsat(const Clause& c, const Assignment& a) {
    for (std::size_t j = 0; j < c.indices.size(); ++j)
        if (a[static_cast<std::size_t>(c.indices[j]) - 1] != c.signs[j]) return 0;
    return 1;
}

std::int64_t hamiltonian(const KSatInstance& inst, const Assignment& a) {
    if (static_cast<int>(a.size()) != inst.n)
        throw std::invalid_argument("assignment length must equal n");
    std::int64_t unsat = 0;
    for (const Clause& c : inst.clauses) unsat += clause_unsat(c, a);
    return -unsat;
}

namespace {

// Flat incidence structure: for each variable, the clauses it appears in,
// one entry per literal occurrence, packed as (clause_id << 1) | sign_bit.
struct Incidence {
    std::vector<std::uint32_t> occ;
    std::vector<std::uint32_t> start;  // n+1 offsets into occ
    std::vector<std::uint8_t> match;   // per clause: literals matched by current sigma
    std::int64_t unsat = 0;            // clauses with match == k

    Incidence(const KSatInstance& inst) {
        const int n = inst.n;
        const std::size_t m = inst.clauses.size();
        if (m > (std::numeric_limits<std::uint32_t>::max() >> 1))
            throw CapacityError("clause count exceeds incidence packing");
        std::vector<std::uint32_t> deg(static_cast<std::size_t>(n), 0);
        for (const Clause& c : inst.clauses)
            for (std::int32_t idx : c.indices) ++deg[static_cast<std::size_t>(idx) - 1];
        start.assign(static_cast<std::size_t>(n) + 1, 0);
        for (int v = 0; v < n; ++v) start[static_cast<std::size_t>(v) + 1] = start[v] + deg[v];
        occ.resize(start[static_cast<std::size_t>(n)]);
        std::vector<std::uint32_t> cursor(start.begin(), start.end() - 1);
        match.assign(m, 0);
        for (std::size_t j = 0; j < m; ++j) {
            const Clause& c = inst.clauses[j];
            for (std::size_t t = 0; t < c.indices.size(); ++t) {
                std::uint32_t v = static_cast<std::uint32_t>(c.indices[t]) - 1;
                std::uint32_t bit = c.signs[t] > 0 ? 1u : 0u;
                occ[cursor[v]++] = (static_cast<std::uint32_t>(j) << 1) | bit;
            }
        }
        reset_all_plus(inst);
    }

    // State: all spins +1. match counts the +1 literals of each clause.
    void reset_all_plus(const KSatInstance& inst) {
        unsat = 0;
        const auto k = static_cast<std::uint8_t>(inst.k);
        for (std::size_t j = 0; j < inst.clauses.size(); ++j) {
            std::uint8_t c = 0;
            for (Spin s : inst.clauses[j].signs) c = static_cast<std::uint8_t>(c + (s > 0));
            match[j] = c;
            if (c == k) ++unsat;
        }
    }

    // sigma_v just flipped; new_plus is 1 if its new value is +1.
    // A literal occurrence toggles matched<->unmatched, so match counts move
    // by +-1 and unsat changes exactly at the k-1 <-> k transitions.
    void apply_flip(std::uint32_t v, std::uint32_t new_plus, std::uint8_t k) {
        const std::uint32_t* p = occ.data() + start[v];
        const std::uint32_t* e = occ.data() + start[v + 1];
        for (; p != e; ++p) {
            std::uint32_t j = *p >> 1;
            if ((*p & 1u) == new_plus) {
                if (++match[j] == k) ++unsat;
            } else {
                if (match[j]-- == k) --unsat;
            }
        }
    }
};

}  // namespace

GroundState ground_state(const KSatInstance& inst, int limit) {
    inst.validate();
    if (inst.n > limit)
        throw CapacityError("ground_state: n=" + std::to_string(inst.n) +
                            " exceeds enumeration cap " + std::to_string(limit));
    Incidence inc(inst);
    const auto k = static_cast<std::uint8_t>(inst.k);
    const std::uint64_t total = 1ULL << inst.n;

    std::uint64_t mask = 0;  // bit v set <=> sigma_{v+1} == -1
    std::int64_t best = inc.unsat;
    std::uint64_t best_mask = 0;
    for (std::uint64_t s = 1; s < total && best > 0; ++s) {
        std::uint32_t v = static_cast<std::uint32_t>(std::countr_zero(s));
        mask ^= 1ULL << v;
        inc.apply_flip(v, ((mask >> v) & 1ULL) ? 0u : 1u, k);
        if (inc.unsat < best) {
            best = inc.unsat;
            best_mask = mask;
        }
    }
    return GroundState{best, assignment_from_mask(best_mask, inst.n)};
}

double m_n_alpha(const KSatInstance& inst, int limit) {
    GroundState gs = ground_state(inst, limit);
    return -static_cast<double>(gs.min_unsat) / static_cast<double>(inst.n);
}

std::int64_t local_search(const KSatInstance& inst, int restarts, int steps,
                          std::uint64_t seed) {
    inst.validate();
    if (restarts < 1 || steps < 1)
        throw std::invalid_argument("local_search: restarts >= 1, steps >= 1");
    Incidence inc(inst);
    const auto k = static_cast<std::uint8_t>(inst.k);
    const auto n = static_cast<std::uint64_t>(inst.n);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        inc.reset_all_plus(inst);
        std::uint64_t mask = 0;
        for (std::uint64_t v = 0; v < n; ++v) {
            if (rng.sign_pm1() < 0) {
                mask ^= 1ULL << v;
                inc.apply_flip(static_cast<std::uint32_t>(v), 0u, k);
            }
        }
        best = std::min(best, inc.unsat);
        for (int t = 0; t < steps; ++t) {
            std::uint32_t v = static_cast<std::uint32_t>(rng.below(n));
            std::int64_t before = inc.unsat;
            mask ^= 1ULL << v;
            inc.apply_flip(v, ((mask >> v) & 1ULL) ? 0u : 1u, k);
            if (inc.unsat > before) {  // reject uphill; sideways moves stay
                mask ^= 1ULL << v;
                inc.apply_flip(v, ((mask >> v) & 1ULL) ? 0u : 1u, k);
            } else {
                best = std::min(best, inc.unsat);
            }
        }
        if (best == 0) break;
    }
    return best;
}

std::vector<std::int32_t> unsat_table(const KSatInstance& inst, int limit) {
    inst.validate();
    if (inst.n > limit)
        throw CapacityError("unsat_table: n=" + std::to_string(inst.n) +
                            " exceeds table cap " + std::to_string(limit));
    Incidence inc(inst);
    const auto k = static_cast<std::uint8_t>(inst.k);
    const std::uint64_t total = 1ULL << inst.n;
    std::vector<std::int32_t> table(total);
    std::uint64_t mask = 0;
    table[0] = static_cast<std::int32_t>(inc.unsat);
    for (std::uint64_t s = 1; s < total; ++s) {
        std::uint32_t v = static_cast<std::uint32_t>(std::countr_zero(s));
        mask ^= 1ULL << v;
        inc.apply_flip(v, ((mask >> v) & 1ULL) ? 0u : 1u, k);
        table[mask] = static_cast<std::int32_t>(inc.unsat);
    }
    return table;
}

Assignment assignment_from_mask(std::uint64_t mask, int n) {
    Assignment a(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        a[static_cast<std::size_t>(v)] = ((mask >> v) & 1ULL) ? Spin{-1} : Spin{1};
    return a;
}

nlohmann::json to_json(const KSatInstance& inst) {
    nlohmann::json j;
    j["n"] = inst.n;
    j["k"] = inst.k;
    j["alpha"] = inst.alpha;
    j["seed"] = std::to_string(inst.seed);
    nlohmann::json cl = nlohmann::json::array();
    for (const Clause& c : inst.clauses) {
        nlohmann::json lits = nlohmann::json::array();
        lits.push_back(c.indices);
        nlohmann::json ss = nlohmann::json::array();
        for (Spin s : c.signs) ss.push_back(static_cast<int>(s));
        lits.push_back(ss);
        cl.push_back(std::move(lits));
    }
    j["clauses"] = std::move(cl);
    return j;
}

KSatInstance instance_from_json(const nlohmann::json& j) {
    KSatInstance inst;
    for (const char* key : {"n", "k", "alpha", "seed", "clauses"})
        if (!j.contains(key))
            throw std::invalid_argument(std::string("instance json: missing field ") + key);
    try {
        inst.n = j.at("n").get<int>();
        inst.k = j.at("k").get<int>();
        inst.alpha = j.at("alpha").get<double>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("instance json: n, k, alpha must be numeric");
    }
    const auto& js = j.at("seed");
    if (js.is_string()) {
        try {
            inst.seed = std::stoull(js.get<std::string>());
        } catch (const std::exception&) {
            throw std::invalid_argument("instance json: seed string is not a valid uint64");
        }
    } else if (js.is_number_unsigned()) {
        inst.seed = js.get<std::uint64_t>();
    } else {
        throw std::invalid_argument("instance json: seed must be a decimal string");
    }
    try {
        for (const auto& e : j.at("clauses")) {
            if (!e.is_array() || e.size() != 2)
                throw std::invalid_argument("instance json: each clause is [[indices],[signs]]");
            Clause c;
            c.indices = e[0].get<std::vector<std::int32_t>>();
            for (const auto& s : e[1]) {
                int v = s.get<int>();
                if (v != 1 && v != -1)
                    throw std::invalid_argument("instance json: signs must be +1 or -1");
                c.signs.push_back(static_cast<Spin>(v));
            }
            inst.clauses.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("instance json: malformed clauses array");
    }
    inst.validate();
    return inst;
}

}  // namespace satglass
