#include "cbseplab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbseplab/numeric.hpp"
#include "cbseplab/rng.hpp"

namespace cbsep {

int occupancy_count(const Occupancy& w) {
    int c = 0;
    for (auto b : w) c += b;
    return c;
}

Occupancy occupancy_from_mask(int n, std::uint32_t mask) {
    Occupancy w(n, 0);
    for (int x = 0; x < n; ++x) w[x] = (mask >> x) & 1u;
    return w;
}

std::uint32_t mask_from_occupancy(const Occupancy& w) {
    std::uint32_t mask = 0;
    for (std::size_t x = 0; x < w.size(); ++x)
        if (w[x]) mask |= (1u << x);
    return mask;
}

Occupancy project(const StateAlphabet& alphabet, const GeneralState& w) {
    Occupancy out(w.size(), 0);
    for (std::size_t x = 0; x < w.size(); ++x) out[x] = alphabet.is_particle[w[x]] ? 1 : 0;
    return out;
}

namespace {

constexpr std::uint64_t kEdgeClockTag = 0xedull;
constexpr std::uint64_t kOrientedClockTag = 0x0eull;

std::vector<double> draw_stream(double rate, double horizon, std::uint64_t seed,
                                std::uint64_t kind, std::uint64_t index,
                                std::uint64_t retry) {
    std::vector<double> times;
    if (rate <= 0.0 || horizon <= 0.0) return times;
    Rng rng(derive_seed(seed, kind, index, retry));
    double t = rng.exponential(rate);
    while (t <= horizon) {
        times.push_back(t);
        t += rng.exponential(rate);
    }
    return times;
}

}  // namespace

double GraphicalTimeline::worst_rate_deviation() const {
    double worst = 0.0;
    int m = edge_clock_count();
    double edge_rate = p / (2.0 - p);
    double oriented_rate = (1.0 - p) / (2.0 - p);
    for (std::size_t c = 0; c < arrivals.size(); ++c) {
        double rate = static_cast<int>(c) < m ? edge_rate : oriented_rate;
        double expect = rate * horizon;
        if (expect <= 0.0) continue;
        double dev = (static_cast<double>(arrivals[c].size()) - expect) / std::sqrt(expect);
        worst = std::max(worst, std::fabs(dev));
    }
    return worst;
}

GraphicalTimeline build_timeline(const Graph& g, double p, double horizon,
                                 std::uint64_t seed) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("build_timeline: need 0 < p < 1");
    if (horizon < 0.0) throw std::invalid_argument("build_timeline: need horizon >= 0");
    GraphicalTimeline tl;
    tl.graph = &g;
    tl.p = p;
    tl.horizon = horizon;
    tl.seed = seed;
    int m = g.edge_count();
    tl.arrivals.resize(3 * m);
    std::vector<std::uint64_t> retry(3 * m, 0);
    double edge_rate = p / (2.0 - p);
    double oriented_rate = (1.0 - p) / (2.0 - p);
    auto draw_clock = [&](int c) {
        if (c < m)
            tl.arrivals[c] = draw_stream(edge_rate, horizon, seed, kEdgeClockTag, c, retry[c]);
        else
            tl.arrivals[c] =
                draw_stream(oriented_rate, horizon, seed, kOrientedClockTag, c - m, retry[c]);
    };
    for (int c = 0; c < 3 * m; ++c) draw_clock(c);

    // Simultaneous arrivals have probability zero; a finite-precision
    // collision triggers a redraw of the later clock's stream.
    for (int guard = 0; guard < 64; ++guard) {
        tl.events.clear();
        for (int c = 0; c < 3 * m; ++c)
            for (std::size_t k = 0; k < tl.arrivals[c].size(); ++k)
                tl.events.push_back({tl.arrivals[c][k], c, static_cast<int>(k)});
        std::sort(tl.events.begin(), tl.events.end(),
                  [](const GraphicalTimeline::Event& a, const GraphicalTimeline::Event& b) {
                      return a.t != b.t ? a.t < b.t : a.clock < b.clock;
                  });
        int collision_clock = -1;
        for (std::size_t i = 1; i < tl.events.size(); ++i)
            if (tl.events[i].t == tl.events[i - 1].t) {
                collision_clock = std::max(tl.events[i].clock, tl.events[i - 1].clock);
                break;
            }
        if (collision_clock < 0) return tl;
        ++retry[collision_clock];
        draw_clock(collision_clock);
    }
    throw std::runtime_error("build_timeline: persistent arrival collision");
}

namespace {

// Shared CBSEP/CSEP evolution. CSEP ignores the unordered (branching)
// clocks.
Trajectory evolve_two_state(const Graph& g, const Occupancy& start,
                            const GraphicalTimeline& tl, bool with_branching) {
    if (start.size() != static_cast<std::size_t>(g.vertex_count()))
        throw std::invalid_argument("evolve: configuration size mismatch");
    if (occupancy_count(start) == 0)
        throw std::invalid_argument("evolve: initial configuration has no particle");
    Trajectory traj;
    traj.initial = start;
    Occupancy occ = start;
    int particles = occupancy_count(occ);
    if (particles == 1) traj.first_time_one_particle = 0.0;

    // current counts of edges with exactly one/two particles
    long long n1 = 0, n2 = 0;
    for (const auto& e : g.edges()) {
        int s = occ[e.u] + occ[e.v];
        if (s == 1) ++n1;
        if (s == 2) ++n2;
    }
    double t_prev = 0.0;

    auto edge_class = [&](int u, int v) { return occ[u] + occ[v]; };
    std::vector<int> touched;
    auto apply = [&](int u, int v, std::uint8_t nu, std::uint8_t nv) {
        touched.clear();
        if (occ[u] != nu) touched.push_back(u);
        if (occ[v] != nv) touched.push_back(v);
        if (touched.empty()) return false;
        // adjust edge-class counts around the changed vertices
        auto adjust = [&](int sign) {
            for (std::size_t ti = 0; ti < touched.size(); ++ti) {
                int w = touched[ti];
                for (int z : g.neighbors(w)) {
                    if (ti > 0 && z == touched[0]) continue;  // count {u,v} once
                    int s = edge_class(w, z);
                    if (s == 1) n1 += sign;
                    if (s == 2) n2 += sign;
                }
            }
        };
        adjust(-1);
        for (int w : touched) {
            int delta = (w == u ? nu : nv) - occ[w];
            occ[w] = (w == u ? nu : nv);
            particles += delta;
        }
        adjust(+1);
        return true;
    };

    for (const auto& ev : tl.events) {
        auto [u, v] = tl.clock_endpoints(ev.clock);
        traj.tally.single_exposure += n1 * (ev.t - t_prev);
        traj.tally.double_exposure += n2 * (ev.t - t_prev);
        t_prev = ev.t;
        std::uint8_t bu = occ[u], bv = occ[v];
        if (bu + bv == 0) continue;  // empty edge: nothing is resampled
        if (tl.is_edge_clock(ev.clock)) {
            if (!with_branching) continue;
            bool changed = apply(u, v, 1, 1);
            if (changed) ++traj.tally.branch;
            traj.events.push_back({ev.t, ev.clock, 1, 1});
        } else {
            bool changed = apply(u, v, 1, 0);
            if (changed) {
                if (bu + bv == 2)
                    ++traj.tally.coalesce;
                else
                    ++traj.tally.sep;
            }
            traj.events.push_back({ev.t, ev.clock, 1, 0});
        }
        if (particles == 1 && traj.first_time_one_particle < 0.0)
            traj.first_time_one_particle = ev.t;
    }
    traj.tally.single_exposure += n1 * (tl.horizon - t_prev);
    traj.tally.double_exposure += n2 * (tl.horizon - t_prev);
    traj.final_state = std::move(occ);
    return traj;
}

}  // namespace

Trajectory evolve_cbsep(const Graph& g, const Occupancy& start, const GraphicalTimeline& tl) {
    return evolve_two_state(g, start, tl, true);
}

Trajectory evolve_csep(const Graph& g, const Occupancy& start, const GraphicalTimeline& tl) {
    return evolve_two_state(g, start, tl, false);
}

namespace {

// Letter sampler for the X variables, conditioned on the particle/hole class.
struct LetterSampler {
    std::vector<int> particle_letters, hole_letters;
    std::vector<double> particle_cdf, hole_cdf;

    explicit LetterSampler(const StateAlphabet& a) {
        double p1 = 0.0, p0 = 0.0;
        for (int s = 0; s < a.size(); ++s) (a.is_particle[s] ? p1 : p0) += a.rho[s];
        double acc1 = 0.0, acc0 = 0.0;
        for (int s = 0; s < a.size(); ++s) {
            if (a.is_particle[s]) {
                acc1 += a.rho[s] / p1;
                particle_letters.push_back(s);
                particle_cdf.push_back(acc1);
            } else {
                acc0 += a.rho[s] / p0;
                hole_letters.push_back(s);
                hole_cdf.push_back(acc0);
            }
        }
    }

    int sample(bool particle, double u) const {
        const auto& cdf = particle ? particle_cdf : hole_cdf;
        const auto& letters = particle ? particle_letters : hole_letters;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::size_t idx = std::min<std::size_t>(it - cdf.begin(), letters.size() - 1);
        return letters[idx];
    }
};

}  // namespace

GeneralTrajectory evolve_gcbsep(const Graph& g, const StateAlphabet& alphabet,
                                const GeneralState& start, const GraphicalTimeline& tl,
                                std::uint64_t resample_seed) {
    alphabet.validate();
    if (start.size() != static_cast<std::size_t>(g.vertex_count()))
        throw std::invalid_argument("evolve_gcbsep: configuration size mismatch");
    if (occupancy_count(project(alphabet, start)) == 0)
        throw std::invalid_argument("evolve_gcbsep: empty projection");
    LetterSampler sampler(alphabet);
    GeneralTrajectory traj;
    traj.initial = start;
    GeneralState state = start;
    for (const auto& ev : tl.events) {
        auto [u, v] = tl.clock_endpoints(ev.clock);
        bool pu = alphabet.is_particle[state[u]], pv = alphabet.is_particle[state[v]];
        if (!pu && !pv) continue;
        // X variables keyed by (clock, arrival index) only
        Rng rng(derive_seed(resample_seed, 0x9c5eull + ev.clock, ev.k));
        std::uint8_t nu, nv;
        if (tl.is_edge_clock(ev.clock)) {
            nu = static_cast<std::uint8_t>(sampler.sample(true, rng.uniform()));
            nv = static_cast<std::uint8_t>(sampler.sample(true, rng.uniform()));
        } else {
            nu = static_cast<std::uint8_t>(sampler.sample(true, rng.uniform()));
            nv = static_cast<std::uint8_t>(sampler.sample(false, rng.uniform()));
        }
        state[u] = nu;
        state[v] = nv;
        traj.events.push_back({ev.t, ev.clock, nu, nv});
    }
    traj.final_state = std::move(state);
    return traj;
}

CouplingResult grand_coupling(const Graph& g, const std::vector<Occupancy>& starts,
                              const GraphicalTimeline& tl) {
    if (starts.empty()) throw std::invalid_argument("grand_coupling: no starting states");
    std::size_t r = starts.size();
    int n = g.vertex_count();
    CouplingResult out;
    // pairs ordered at time zero
    std::vector<std::pair<int, int>> ordered;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
            if (i == j) continue;
            bool leq = true;
            for (int x = 0; x < n; ++x)
                if (starts[i][x] > starts[j][x]) {
                    leq = false;
                    break;
                }
            if (leq) ordered.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    out.ordered_pairs = static_cast<long long>(ordered.size());

    std::vector<Occupancy> occ = starts;
    for (const auto& w : occ)
        if (occupancy_count(w) == 0)
            throw std::invalid_argument("grand_coupling: empty start");
    auto all_equal = [&]() {
        for (std::size_t i = 1; i < r; ++i)
            if (occ[i] != occ[0]) return false;
        return true;
    };
    bool coalesced = all_equal();
    if (coalesced) out.coalescence_time = 0.0;

    for (const auto& ev : tl.events) {
        auto [u, v] = tl.clock_endpoints(ev.clock);
        bool edge_clock = tl.is_edge_clock(ev.clock);
        for (std::size_t i = 0; i < r; ++i) {
            auto& w = occ[i];
            if (w[u] + w[v] == 0) continue;
            if (edge_clock) {
                w[u] = 1;
                w[v] = 1;
            } else {
                w[u] = 1;
                w[v] = 0;
            }
        }
        for (auto [i, j] : ordered)
            for (int x = 0; x < n; ++x)
                if (occ[i][x] > occ[j][x]) {
                    ++out.order_violations;
                    break;
                }
        if (!coalesced && all_equal()) {
            coalesced = true;
            out.coalescence_time = ev.t;
        }
    }
    // final trajectories are re-derived per start for callers that want them
    out.trajectories.reserve(r);
    for (const auto& s : starts) out.trajectories.push_back(evolve_cbsep(g, s, tl));
    return out;
}

EmbeddedWalk embedded_walk(const Graph& g, const Occupancy& start, int v,
                           const GraphicalTimeline& tl) {
    if (v < 0 || v >= g.vertex_count()) throw std::invalid_argument("embedded_walk: bad vertex");
    if (!start[v]) throw std::invalid_argument("embedded_walk: start vertex unoccupied");
    EmbeddedWalk walk;
    walk.start = v;
    Occupancy occ = start;
    int pos = v;
    std::vector<char> visited(g.vertex_count(), 0);
    visited[pos] = 1;
    int covered = 1;
    int m = g.edge_count();
    for (const auto& ev : tl.events) {
        auto [u, w] = tl.clock_endpoints(ev.clock);
        // the walk jumps on an oriented arrival into its position
        if (!tl.is_edge_clock(ev.clock) && w == pos) {
            pos = u;
            walk.jumps.emplace_back(ev.t, pos);
            if (!visited[pos]) {
                visited[pos] = 1;
                if (++covered == g.vertex_count() && walk.cover_time < 0.0)
                    walk.cover_time = ev.t;
            }
        }
        // evolve the configuration alongside
        if (occ[u] + occ[w] > 0) {
            if (tl.is_edge_clock(ev.clock)) {
                occ[u] = 1;
                occ[w] = 1;
            } else {
                occ[u] = 1;
                occ[w] = 0;
            }
        }
        if (!occ[pos]) walk.invariant_held = false;
    }
    (void)m;
    return walk;
}

SigmaCovCurves sigma_cov_estimate(const Graph& g, double p, int samples,
                                  std::uint64_t seed, int grid_points) {
    if (samples < 1) throw std::invalid_argument("sigma_cov_estimate: need samples >= 1");
    int n = g.vertex_count();
    double rate_scale = (1.0 - p) / (2.0 - p);
    std::vector<std::vector<double>> cover(n);
    double tmax = 0.0;
    for (int v = 0; v < n; ++v) {
        cover[v].reserve(samples);
        for (int rep = 0; rep < samples; ++rep) {
            Rng rng(derive_seed(seed, 0xc07e4ull, v, rep));
            std::vector<char> visited(n, 0);
            visited[v] = 1;
            int covered = 1, pos = v;
            double t = 0.0;
            while (covered < n) {
                t += rng.exponential(g.degree(pos) * rate_scale);
                const auto& nb = g.neighbors(pos);
                pos = nb[rng.pick(nb.size())];
                if (!visited[pos]) {
                    visited[pos] = 1;
                    ++covered;
                }
            }
            cover[v].push_back(t);
            tmax = std::max(tmax, t);
        }
    }
    SigmaCovCurves out;
    out.grid.resize(grid_points);
    for (int i = 0; i < grid_points; ++i)
        out.grid[i] = tmax * (i + 1) / static_cast<double>(grid_points);
    out.survival.assign(n, std::vector<double>(grid_points, 0.0));
    out.max_survival.assign(grid_points, 0.0);
    out.band_lo.assign(grid_points, 0.0);
    out.band_hi.assign(grid_points, 0.0);
    out.quantile_1_over_e = out.grid.back();
    const double inve = std::exp(-1.0);
    for (int i = 0; i < grid_points; ++i) {
        std::size_t worst_exceed = 0;
        for (int v = 0; v < n; ++v) {
            std::size_t exceed = 0;
            for (double t : cover[v])
                if (t > out.grid[i]) ++exceed;
            out.survival[v][i] = static_cast<double>(exceed) / samples;
            out.max_survival[i] = std::max(out.max_survival[i], out.survival[v][i]);
            worst_exceed = std::max(worst_exceed, exceed);
        }
        auto band = wilson_interval(worst_exceed, samples);
        out.band_lo[i] = band.lo;
        out.band_hi[i] = band.hi;
    }
    (void)inve;
    // Exact empirical quantile: per start the k-th order statistic with
    // k = ceil(samples (1 - 1/e)), maximized over starts.
    std::size_t k = static_cast<std::size_t>(
        std::ceil(samples * (1.0 - std::exp(-1.0)) - 1e-12));
    k = std::max<std::size_t>(1, std::min<std::size_t>(k, samples));
    double q = 0.0;
    for (int v = 0; v < n; ++v) {
        std::vector<double> sorted = cover[v];
        std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
        q = std::max(q, sorted[k - 1]);
    }
    out.quantile_1_over_e = q;
    return out;
}

HittingSample hitting_time_one_particle(const Graph& g, const Occupancy& start,
                                        const GraphicalTimeline& tl) {
    Trajectory traj = evolve_cbsep(g, start, tl);
    if (traj.first_time_one_particle >= 0.0) return {traj.first_time_one_particle, false};
    return {tl.horizon, true};
}

std::vector<char> updated_set(const Graph& g, const Trajectory& traj, double t) {
    std::vector<char> upd(g.vertex_count(), 0);
    for (const auto& ev : traj.events) {
        if (ev.t > t) break;
        int m = g.edge_count();
        int u, v;
        if (ev.clock < m) {
            u = g.edges()[ev.clock].u;
            v = g.edges()[ev.clock].v;
        } else {
            auto pr = g.oriented(ev.clock - m);
            u = pr.first;
            v = pr.second;
        }
        upd[u] = 1;
        upd[v] = 1;
    }
    return upd;
}

}  // namespace cbsep
