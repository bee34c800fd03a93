#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cbseplab/generator.hpp"
#include "cbseplab/graph.hpp"

namespace cbsep {

// Ent_mu(f^2) = mu(f^2 log(f^2 / mu(f^2))), with 0 log 0 = 0.
double entropy_f2(const Measure& mu, const std::vector<double>& f);
double variance(const Measure& mu, const std::vector<double>& f);

/// Distribution at time t started from `initial`, computed by uniformization
/// with the Poisson series truncated at relative tail mass 1e-14.
std::vector<double> semigroup(const SparseGenerator& gen, double t,
                              const std::vector<double>& initial);

struct MixingTimes {
    double t_mix;  // total variation threshold 1/(2e), worst start
    double t2;     // l2 threshold 1/e on ||h-1||_2, worst start
};

/// Exact mixing times via the spectral decomposition of the symmetrized
/// generator and bisection in t.
MixingTimes mixing_times(const SparseGenerator& gen, double rel_tol = 1e-10);

// max_w TV(P_t(w,.), mu) for the subset of starting states (all if empty).
double tv_from_worst_start(const SparseGenerator& gen, double t,
                           const std::vector<int>& starts = {});

struct LogSobResult {
    double witness;     // min over candidates of D(f)/Ent(f^2); upper bound on alpha
    double bracket_lo;  // 1 / ((2 + log(1/mu_*)) t_rel)
    double bracket_hi;  // 1 / (2 t_rel)
    double t_rel;
    double mu_star;
    bool stagnated;     // optimizer never improved on the spectral candidate
};

LogSobResult logsob_constant(const SparseGenerator& gen, int restarts = 20,
                             std::uint64_t seed = 2024);

struct EntropySplit {
    double conditional_term;  // mu(Ent(f^2 | N))
    double projected_term;    // Ent of mu(f^2 | N) under the particle-count law
};

EntropySplit entropy_decomposition(const StateSpace& space, const Measure& mu,
                                   const std::vector<double>& f);

/// Largest generalized eigenvalue sup_f A(f)/B(f) over the orthogonal
/// complement of ker(B). Requires ker(B) within ker(A).
double form_ratio_max(const QuadraticForm& A, const QuadraticForm& B);

struct RestrictedGapHitting {
    double lambda0;           // smallest Dirichlet eigenvalue on {N >= 2}
    double expected_hitting;  // E_{mu(.|N>=2)} of the first time N = 1
};

RestrictedGapHitting restricted_gap_and_hitting(const Graph& g, double p);

}  // namespace cbsep
