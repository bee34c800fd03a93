#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cbseplab/graph.hpp"

namespace cbsep {

/// Antisymmetric edge function theta with a designated source and sink.
/// Values are stored on the canonical orientation (u < v); theta of the
/// reversed orientation is the negation.
struct Flow {
    int source = 0;
    int sink = 0;
    std::vector<double> theta;  // indexed like Graph::edges()

    double on_oriented(const Graph& g, int k) const {
        int m = g.edge_count();
        return k < m ? theta[k] : -theta[k - m];
    }
    // Net out-flow at x.
    double divergence(const Graph& g, int x) const;
    bool is_unit_flow(const Graph& g, double tol = 1e-9) const;
};

double flow_energy(const Graph& g, const Flow& f);

double effective_resistance(const Graph& g, int x, int y);

// The energy-minimizing unit flow from x to y (the current flow of the
// unit-conductance network).
Flow optimal_flow(const Graph& g, int x, int y);

struct ResistanceProfile {
    Eigen::MatrixXd R;          // pairwise resistances, symmetric, zero diagonal
    std::vector<double> r_bar;  // r_bar[y] = (1/n) sum_x R(x,y)
    double r_bar_max;
};

// All pairwise resistances from a single grounded-Laplacian factorization.
ResistanceProfile resistance_profile(const Graph& g);

struct CommuteCheck {
    double exact;     // 2|E| * R(x,y)
    double estimate;  // Monte Carlo mean commute steps of the discrete walk
    double stderr_;
};

CommuteCheck commute_time_check(const Graph& g, int x, int y, int mc_samples,
                                std::uint64_t seed);

}  // namespace cbsep
