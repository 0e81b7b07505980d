#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace satglass {

using Spin = std::int8_t;                // +1 or -1
using Assignment = std::vector<Spin>;    // length N

/// One K-literal clause: variable indices (1-based, duplicates allowed) and
/// the sign each variable must take for the clause to be unsatisfied.
struct Clause {
    std::vector<std::int32_t> indices;
    std::vector<Spin> signs;
};

/// A realized draw of the diluted disorder: the clause count is Poisson with
/// mean alpha*N, indices are i.i.d. uniform on 1..N and signs i.i.d. +-1.
/// The (n, k, alpha, seed) tuple regenerates the instance bit-exactly.
struct KSatInstance {
    int n = 0;
    int k = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::vector<Clause> clauses;

    void validate() const;  // throws std::invalid_argument on broken invariants
};

/// Capacity overruns (enumeration or memory caps) carry their own type so the
/// CLI can map them to a distinct exit code.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kKsatEnumerationCap = 26;

KSatInstance sample_instance(int n, int k, double alpha, std::uint64_t seed);

/// 1 when every literal matches its sign (clause unsatisfied), else 0.
int clause_unsat(const Clause& c, const Assignment& a);

/// -(number of unsatisfied clauses); in [-m, 0].
std::int64_t hamiltonian(const KSatInstance& inst, const Assignment& a);

struct GroundState {
    std::int64_t min_unsat = 0;
    Assignment argmin;  // first minimizer in Gray traversal order
};

/// Exact minimum of the unsatisfied-clause count over all 2^N assignments.
/// Gray-code traversal from the all-(+1) corner with incremental per-flip
/// updates through variable->clause incidence lists.
GroundState ground_state(const KSatInstance& inst, int limit = kKsatEnumerationCap);

/// max over assignments of H_alpha(sigma)/N, i.e. -min_unsat/N.
double m_n_alpha(const KSatInstance& inst, int limit = kKsatEnumerationCap);

/// Random-restart single-flip hill climbing with sideways moves. Returns the
/// best unsatisfied count seen; an upper bound on the exact minimum.
std::int64_t local_search(const KSatInstance& inst, int restarts, int steps,
                          std::uint64_t seed);

/// Unsatisfied-clause counts for all 2^N assignments, indexed by state mask
/// (bit i set means variable i+1 has spin -1). Used by the interpolation
/// diagnostics at small N.
std::vector<std::int32_t> unsat_table(const KSatInstance& inst, int limit = 20);

Assignment assignment_from_mask(std::uint64_t mask, int n);

nlohmann::json to_json(const KSatInstance& inst);
KSatInstance instance_from_json(const nlohmann::json& j);

}  // namespace satglass
