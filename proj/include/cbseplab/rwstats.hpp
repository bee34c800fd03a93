#pragma once

#include <cstdint>
#include <vector>

#include "cbseplab/graph.hpp"

namespace cbsep {

/// Mixing time of the discrete-time lazy simple random walk (hold with
/// probability 1/2, else jump to a uniform neighbour): smallest integer t
/// with max_x TV(P^t(x,.), pi) <= threshold, pi proportional to degree.
long long lazy_mixing_time(const Graph& g, double threshold = 0.25,
                           long long max_steps = 1LL << 40);

struct MeetingTime {
    double value;
    bool exact;      // linear solve (true) or Monte Carlo fallback
    double stderr_;  // 0 for the exact method
};

/// Expected meeting time of two independent continuous-time walks jumping
/// along each edge at rate 1, from independent uniform starts (coinciding
/// starts contribute 0). Exact solve up to n = 300, Monte Carlo beyond.
MeetingTime expected_meeting_time(const Graph& g, int mc_samples = 20000,
                                  std::uint64_t seed = 99);

struct CoverTimeEstimate {
    double quantile;  // inf{t : max_x P_x(tau_cov > t) <= 1/e}, MC estimate
    double band_lo, band_hi;
    std::vector<std::vector<double>> samples;  // per start
};

/// Cover time quantile of the discrete-time simple random walk.
CoverTimeEstimate cover_time_quantile(const Graph& g, int samples, std::uint64_t seed);

}  // namespace cbsep
