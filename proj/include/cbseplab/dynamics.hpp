#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cbseplab/generator.hpp"
#include "cbseplab/graph.hpp"

namespace cbsep {

using Occupancy = std::vector<std::uint8_t>;     // 0/1 per vertex
using GeneralState = std::vector<std::uint8_t>;  // alphabet letter per vertex

int occupancy_count(const Occupancy& w);
Occupancy occupancy_from_mask(int n, std::uint32_t mask);
std::uint32_t mask_from_occupancy(const Occupancy& w);
Occupancy project(const StateAlphabet& alphabet, const GeneralState& w);

/// Poisson arrival streams of the graphical construction: one clock per edge
/// (rate p/(2-p)) and one per oriented edge (rate (1-p)/(2-p)), all
/// independent, materialized up to the horizon and merged in time order.
/// Streams are derived from the seed per clock, so adding clocks never
/// perturbs existing ones.
struct GraphicalTimeline {
    const Graph* graph = nullptr;
    double p = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;

    struct Event {
        double t;
        int clock;
        int k;  // arrival index within the clock
    };
    std::vector<std::vector<double>> arrivals;  // per clock
    std::vector<Event> events;                  // merged, strictly increasing t

    int edge_clock_count() const { return graph->edge_count(); }
    bool is_edge_clock(int c) const { return c < edge_clock_count(); }
    // Endpoints (u,v): canonical order for edge clocks, orientation for
    // oriented clocks.
    std::pair<int, int> clock_endpoints(int c) const {
        int m = edge_clock_count();
        if (c < m) {
            const auto& e = graph->edges()[c];
            return {e.u, e.v};
        }
        return graph->oriented(c - m);
    }
    // Worst deviation of per-clock arrival counts from the nominal rate, in
    // standard deviations of the Poisson count.
    double worst_rate_deviation() const;
};

GraphicalTimeline build_timeline(const Graph& g, double p, double horizon,
                                 std::uint64_t seed);

struct TrajectoryEvent {
    double t;
    int clock;
    std::uint8_t a, b;  // resulting local states at the clock's endpoints
};

struct MoveTally {
    long long sep = 0;
    long long branch = 0;
    long long coalesce = 0;
    // time integrals of the number of edges with exactly one/two particles
    double single_exposure = 0.0;
    double double_exposure = 0.0;
};

struct Trajectory {
    Occupancy initial;
    Occupancy final_state;
    std::vector<TrajectoryEvent> events;  // applied resamples only
    MoveTally tally;
    double first_time_one_particle = -1.0;  // -1 if N != 1 throughout
};

Trajectory evolve_cbsep(const Graph& g, const Occupancy& start,
                        const GraphicalTimeline& tl);

// Coalescing random walks: same oriented clocks, branching clocks ignored.
Trajectory evolve_csep(const Graph& g, const Occupancy& start,
                       const GraphicalTimeline& tl);

struct GeneralTrajectory {
    GeneralState initial;
    GeneralState final_state;
    std::vector<TrajectoryEvent> events;
};

// The X resampling variables are sampled lazily, keyed by (clock, arrival
// index) from `resample_seed`, so coupled runs sharing a timeline and seed
// see identical variables.
GeneralTrajectory evolve_gcbsep(const Graph& g, const StateAlphabet& alphabet,
                                const GeneralState& start, const GraphicalTimeline& tl,
                                std::uint64_t resample_seed);

struct CouplingResult {
    std::vector<Trajectory> trajectories;
    // first event time at which all trajectories agree; infinity if never
    double coalescence_time = std::numeric_limits<double>::infinity();
    long long order_violations = 0;  // among initially ordered pairs
    long long ordered_pairs = 0;
};

CouplingResult grand_coupling(const Graph& g, const std::vector<Occupancy>& starts,
                              const GraphicalTimeline& tl);

struct EmbeddedWalk {
    int start = 0;
    std::vector<std::pair<double, int>> jumps;  // (time, new position)
    bool invariant_held = true;  // walker vertex occupied at every event time
    double cover_time = -1.0;    // -1 if the walk did not cover within horizon
};

// Walk embedded in CBSEP: sits on an occupied vertex, moves to u at the
// first oriented (u, W) arrival.
EmbeddedWalk embedded_walk(const Graph& g, const Occupancy& start, int v,
                           const GraphicalTimeline& tl);

struct SigmaCovCurves {
    std::vector<double> grid;
    std::vector<std::vector<double>> survival;  // per start vertex
    std::vector<double> max_survival;
    std::vector<double> band_lo, band_hi;  // Wilson band for the max curve
    double quantile_1_over_e = 0.0;
};

// Monte Carlo survival curves of the embedded walk's cover time (jump rate
// d_v (1-p)/(2-p), uniform neighbour).
SigmaCovCurves sigma_cov_estimate(const Graph& g, double p, int samples,
                                  std::uint64_t seed, int grid_points = 64);

struct HittingSample {
    double time = 0.0;
    bool censored = false;
};

HittingSample hitting_time_one_particle(const Graph& g, const Occupancy& start,
                                        const GraphicalTimeline& tl);

// Vertices touched by an applied resample up to time t.
std::vector<char> updated_set(const Graph& g, const Trajectory& traj, double t);

}  // namespace cbsep
