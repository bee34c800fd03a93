#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cbsep {

/// Enumerated finite state space. States are codes in base `radix` with one
/// digit per vertex; for two-state models the code is the occupancy bitmask.
struct StateSpace {
    int n = 0;          // number of vertices
    int radix = 2;      // single-vertex alphabet size
    std::vector<std::uint32_t> states;
    std::vector<std::int32_t> lookup;  // code -> index, -1 if absent

    int dim() const { return static_cast<int>(states.size()); }
    std::uint32_t state(int i) const { return states[i]; }
    int index(std::uint32_t code) const { return lookup[code]; }

    int digit(std::uint32_t code, int x) const {
        if (radix == 2) return (code >> x) & 1u;
        std::uint32_t c = code;
        for (int i = 0; i < x; ++i) c /= static_cast<std::uint32_t>(radix);
        return static_cast<int>(c % static_cast<std::uint32_t>(radix));
    }
};

enum class StateConstraint {
    omega_plus,     // at least one particle
    all,            // unrestricted
    n_at_least_2,   // at least two particles
};

StateSpace enumerate_states(int n, StateConstraint c);
StateSpace enumerate_fixed_particle_count(int n, int k);

inline int particle_count(std::uint32_t mask) { return std::popcount(mask); }

/// Probability weights over an enumerated space; normalized to sum to one.
struct Measure {
    std::vector<double> w;

    double min_weight() const;
    double sum() const;
    void normalize();
};

// Bernoulli(p) product measure conditioned on the given space.
Measure conditioned_bernoulli(const StateSpace& space, double p);

// mu(f^2 | N = k) for all k = 0..n over a two-state space; entries with
// gamma(k) = 0 are set to zero.
std::vector<double> conditional_second_moment(const StateSpace& space, const Measure& mu,
                                              const std::vector<double>& f);

}  // namespace cbsep
