#include <doctest.h>

#include <cmath>

#include "cbseplab/dynamics.hpp"
#include "cbseplab/numeric.hpp"
#include "cbseplab/rng.hpp"
#include "cbseplab/spectral.hpp"

using namespace cbsep;

namespace {

StateAlphabet three_letter(double p) {
    StateAlphabet a;
    a.rho = {(1 - p) / 2, p, (1 - p) / 2};
    a.is_particle = {0, 1, 0};
    return a;
}

Occupancy random_nonempty(int n, Rng& rng) {
    Occupancy w(n, 0);
    int count = 0;
    for (int x = 0; x < n; ++x) {
        w[x] = rng.uniform() < 0.5 ? 1 : 0;
        count += w[x];
    }
    if (count == 0) w[rng.pick(n)] = 1;
    return w;
}

}  // namespace

TEST_CASE("timeline: reproducibility, ordering, rates") {
    Graph g = make_cycle(6);
    auto tl1 = build_timeline(g, 0.5, 50.0, 42);
    auto tl2 = build_timeline(g, 0.5, 50.0, 42);
    REQUIRE(tl1.events.size() == tl2.events.size());
    for (std::size_t i = 0; i < tl1.events.size(); ++i) {
        CHECK(tl1.events[i].t == tl2.events[i].t);
        CHECK(tl1.events[i].clock == tl2.events[i].clock);
    }
    for (std::size_t i = 1; i < tl1.events.size(); ++i)
        CHECK(tl1.events[i].t > tl1.events[i - 1].t);  // strictly increasing
    CHECK(build_timeline(g, 0.5, 0.0, 7).events.empty());

    // single edge at p = 1/2: all three clocks have rate 1/3
    Graph p2 = make_path(2);
    auto tl = build_timeline(p2, 0.5, 3e5, 9);
    CHECK(tl.worst_rate_deviation() < 5.0);
    for (int c = 0; c < 3; ++c) {
        double rate = static_cast<double>(tl.arrivals[c].size()) / 3e5;
        CHECK(rate == doctest::Approx(1.0 / 3.0).epsilon(0.02));
    }
}

TEST_CASE("evolution basics on one edge") {
    Graph g = make_path(2);
    // no arrivals: configuration unchanged
    auto tl0 = build_timeline(g, 0.3, 0.0, 1);
    auto traj = evolve_cbsep(g, {1, 0}, tl0);
    CHECK(traj.final_state == Occupancy{1, 0});
    CHECK(traj.events.empty());
    CHECK_THROWS(evolve_cbsep(g, {0, 0}, tl0));

    // replay the construction by hand and compare against the library
    auto tl = build_timeline(g, 0.3, 20.0, 2);
    Occupancy w{1, 0};
    for (const auto& ev : tl.events) {
        auto [u, v] = tl.clock_endpoints(ev.clock);
        if (w[u] + w[v] == 0) continue;
        if (tl.is_edge_clock(ev.clock)) {
            w[u] = w[v] = 1;
        } else {
            w[u] = 1;
            w[v] = 0;
        }
    }
    auto full = evolve_cbsep(g, {1, 0}, tl);
    CHECK(full.final_state == w);
    CHECK(occupancy_count(full.final_state) >= 1);
}

TEST_CASE("empirical move rates match the model rates within 2 percent") {
    Graph g = make_cycle(10);
    double p = 0.3;
    // horizon tuned to produce over 1e6 arrivals in total
    double total_rate = g.edge_count() * p / (2 - p) + 2.0 * g.edge_count() * (1 - p) / (2 - p);
    double horizon = 1.15e6 / total_rate;
    auto tl = build_timeline(g, p, horizon, 31);
    REQUIRE(tl.events.size() > 1000000);
    Rng rng(8);
    auto traj = evolve_cbsep(g, random_nonempty(10, rng), tl);
    double sep_rate = traj.tally.sep / traj.tally.single_exposure;
    double branch_rate = traj.tally.branch / traj.tally.single_exposure;
    double coal_rate = traj.tally.coalesce / traj.tally.double_exposure;
    CHECK(sep_rate == doctest::Approx((1 - p) / (2 - p)).epsilon(0.02));
    CHECK(branch_rate == doctest::Approx(p / (2 - p)).epsilon(0.02));
    CHECK(coal_rate == doctest::Approx(2 * (1 - p) / (2 - p)).epsilon(0.02));
}

TEST_CASE("embedded walk: stays on particles, jump rate matches") {
    Graph g = make_cycle(10);
    double p = 0.3;
    auto tl = build_timeline(g, p, 2e4, 12);
    Occupancy start(10, 0);
    start[3] = 1;
    auto walk = embedded_walk(g, start, 3, tl);
    CHECK(walk.invariant_held);
    double jump_rate = static_cast<double>(walk.jumps.size()) / 2e4;
    CHECK(jump_rate == doctest::Approx(2.0 * (1 - p) / (2 - p)).epsilon(0.02));

    // no arrivals: the walk stays put
    auto tl0 = build_timeline(g, p, 0.0, 1);
    auto w0 = embedded_walk(g, start, 3, tl0);
    CHECK(w0.jumps.empty());
    CHECK_THROWS(embedded_walk(g, start, 4, tl0));  // unoccupied start vertex
}

TEST_CASE("csep: particle count never increases, pure walk for one particle") {
    Graph g = make_cycle(8);
    auto tl = build_timeline(g, 0.3, 50.0, 77);
    Occupancy single(8, 0);
    single[2] = 1;
    auto traj = evolve_csep(g, single, tl);
    CHECK(occupancy_count(traj.final_state) == 1);
    CHECK(traj.tally.branch == 0);

    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        auto tlr = build_timeline(g, 0.3, 10.0, 1000 + rep);
        Occupancy start = random_nonempty(8, rng);
        auto t = evolve_csep(g, start, tlr);
        CHECK(occupancy_count(t.final_state) <= occupancy_count(start));
        CHECK(occupancy_count(t.final_state) >= 1);
    }
}

TEST_CASE("csep trajectories are pathwise dominated by cbsep") {
    Rng rng(21);
    Graph g = make_torus(4, 2);
    int violations = 0;
    for (int rep = 0; rep < 300; ++rep) {
        auto tl = build_timeline(g, 0.25, 4.0, 5000 + rep);
        Occupancy start = random_nonempty(16, rng);
        // evolve both on the shared timeline, checking inclusion eventwise
        Occupancy a = start, b = start;  // a: csep, b: cbsep
        for (const auto& ev : tl.events) {
            auto [u, v] = tl.clock_endpoints(ev.clock);
            if (tl.is_edge_clock(ev.clock)) {
                if (b[u] + b[v] > 0) {
                    b[u] = b[v] = 1;
                }
            } else {
                if (a[u] + a[v] > 0) {
                    a[u] = 1;
                    a[v] = 0;
                }
                if (b[u] + b[v] > 0) {
                    b[u] = 1;
                    b[v] = 0;
                }
            }
            for (int x = 0; x < 16; ++x)
                if (a[x] > b[x]) ++violations;
        }
        // endpoint cross-check with the library evolutions
        CHECK(evolve_csep(g, start, tl).final_state == a);
        CHECK(evolve_cbsep(g, start, tl).final_state == b);
    }
    CHECK(violations == 0);
}

TEST_CASE("grand coupling preserves the partial order and coalesces") {
    Graph g = make_cycle(8);
    Rng rng(14);
    // ordered pair starts
    long long violations = 0;
    for (int rep = 0; rep < 200; ++rep) {
        auto tl = build_timeline(g, 0.3, 6.0, 9000 + rep);
        Occupancy lo = random_nonempty(8, rng);
        Occupancy hi = lo;
        for (int x = 0; x < 8; ++x)
            if (rng.uniform() < 0.4) hi[x] = 1;
        auto res = grand_coupling(g, {lo, hi}, tl);
        violations += res.order_violations;
        CHECK(res.ordered_pairs >= 1);
    }
    CHECK(violations == 0);

    // identical starts coalesce immediately
    auto tl = build_timeline(g, 0.3, 1.0, 5);
    Occupancy w(8, 0);
    w[0] = 1;
    auto res = grand_coupling(g, {w, w}, tl);
    CHECK(res.coalescence_time == 0.0);

    // single-particle starts all coalesce within a long horizon
    auto tl2 = build_timeline(g, 0.3, 400.0, 6);
    std::vector<Occupancy> starts;
    for (int x = 0; x < 8; ++x) {
        Occupancy s(8, 0);
        s[x] = 1;
        starts.push_back(s);
    }
    auto all = grand_coupling(g, starts, tl2);
    CHECK(all.order_violations == 0);
    CHECK(std::isfinite(all.coalescence_time));
}

TEST_CASE("gcbsep projection equals cbsep eventwise") {
    Graph g = make_cycle(5);
    double p = 0.3;
    auto alphabet = three_letter(p);
    Rng rng(70);
    for (int rep = 0; rep < 100; ++rep) {
        auto tl = build_timeline(g, p, 8.0, 40000 + rep);
        GeneralState gs(5);
        bool has = false;
        for (auto& s : gs) {
            s = static_cast<std::uint8_t>(rng.pick(3));
            has = has || alphabet.is_particle[s];
        }
        if (!has) gs[rng.pick(5)] = 1;
        auto gt = evolve_gcbsep(g, alphabet, gs, tl, 555);
        auto ct = evolve_cbsep(g, project(alphabet, gs), tl);
        REQUIRE(gt.events.size() == ct.events.size());
        for (std::size_t i = 0; i < gt.events.size(); ++i) {
            CHECK(gt.events[i].t == ct.events[i].t);
            CHECK(gt.events[i].clock == ct.events[i].clock);
            CHECK((alphabet.is_particle[gt.events[i].a] ? 1 : 0) == ct.events[i].a);
            CHECK((alphabet.is_particle[gt.events[i].b] ? 1 : 0) == ct.events[i].b);
        }
        CHECK(project(alphabet, gt.final_state) == ct.final_state);
    }
}

TEST_CASE("gcbsep: same projection and resampling seed give identical updated sites") {
    Graph g = make_path(4);
    double p = 0.4;
    auto alphabet = three_letter(p);
    auto tl = build_timeline(g, p, 5.0, 99);
    // two starts with equal projection
    GeneralState a{1, 0, 2, 0}, b{1, 2, 0, 0};
    auto ta = evolve_gcbsep(g, alphabet, a, tl, 123);
    auto tb = evolve_gcbsep(g, alphabet, b, tl, 123);
    REQUIRE(ta.events.size() == tb.events.size());
    // projections agree at all event times, and any vertex flipped in the
    // projection carries the same letter in both runs afterwards
    CHECK(project(alphabet, ta.final_state) == project(alphabet, tb.final_state));
    std::vector<char> touched(4, 0);
    for (std::size_t i = 0; i < ta.events.size(); ++i) {
        CHECK(ta.events[i].a == tb.events[i].a);
        CHECK(ta.events[i].b == tb.events[i].b);
    }
    // untouched vertices keep their initial letters
    auto upd = updated_set(g, evolve_cbsep(g, project(alphabet, a), tl), tl.horizon);
    for (int x = 0; x < 4; ++x)
        if (!upd[x]) {
            CHECK(ta.final_state[x] == a[x]);
            CHECK(tb.final_state[x] == b[x]);
        } else {
            CHECK(ta.final_state[x] == tb.final_state[x]);
        }
}

TEST_CASE("hitting time of the one-particle set") {
    Graph g = make_path(2);
    double p = 0.3;
    // single-particle start: hits immediately
    auto tl = build_timeline(g, p, 5.0, 3);
    CHECK(hitting_time_one_particle(g, {1, 0}, tl).time == 0.0);

    // from (1,1): exponential with the coalescing exit rate
    std::vector<double> samples;
    double rate = 2 * (1 - p) / (2 - p);
    int censored = 0;
    for (int rep = 0; rep < 4000; ++rep) {
        auto tlr = build_timeline(g, p, 60.0, 100000 + rep);
        auto h = hitting_time_one_particle(g, {1, 1}, tlr);
        if (h.censored)
            ++censored;
        else
            samples.push_back(h.time);
    }
    CHECK(censored == 0);
    auto ms = mean_stderr(samples);
    CHECK(std::fabs(ms.mean - 1.0 / rate) <= 3.0 * ms.stderr_);
}

TEST_CASE("updated-set conditional law: chi-square at fixed t") {
    // for x in Xi_t the law of w_x(t) given the arrivals is rho(.|S_class);
    // pooled over runs this is a fixed conditional multinomial
    Graph g = make_path(3);
    double p = 0.35;
    auto alphabet = three_letter(p);
    double t = 1.2;
    long long counts[2][3] = {{0, 0, 0}, {0, 0, 0}};  // [projection class][letter]
    int runs = 30000;
    Rng rng(5150);
    for (int rep = 0; rep < runs; ++rep) {
        auto tl = build_timeline(g, p, t, 700000 + rep);
        GeneralState gs(3);
        bool has = false;
        for (auto& s : gs) {
            s = static_cast<std::uint8_t>(rng.pick(3));
            has = has || alphabet.is_particle[s];
        }
        if (!has) gs[rng.pick(3)] = 1;
        auto gt = evolve_gcbsep(g, alphabet, gs, tl, 910000 + rep);
        auto ct = evolve_cbsep(g, project(alphabet, gs), tl);
        auto upd = updated_set(g, ct, t);
        for (int x = 0; x < 3; ++x)
            if (upd[x]) ++counts[ct.final_state[x]][gt.final_state[x]];
    }
    // expected conditional laws: holes rho(.|S0) uniform on {0,2}; particles
    // rho(.|S1) = delta_1
    CHECK(counts[1][0] == 0);
    CHECK(counts[1][2] == 0);
    double n0 = static_cast<double>(counts[0][0] + counts[0][2]);
    CHECK(counts[0][1] == 0);
    double chi2 = 0.0;
    for (double observed : {static_cast<double>(counts[0][0]), static_cast<double>(counts[0][2])}) {
        double expect = n0 / 2.0;
        chi2 += (observed - expect) * (observed - expect) / expect;
    }
    CHECK(chi_square_sf(chi2, 1) > 0.01);
}

TEST_CASE("graphical construction matches the exact semigroup (chi-square)") {
    Graph g = make_path(3);
    double p = 0.3, t = 0.9;
    auto gen = cbsep_generator(g, p);
    std::vector<double> init(gen.dim(), 0.0);
    std::uint32_t start_mask = 0b101;
    init[gen.space.index(start_mask)] = 1.0;
    auto exact = semigroup(gen, t, init);
    std::vector<long long> counts(gen.dim(), 0);
    int runs = 40000;
    for (int rep = 0; rep < runs; ++rep) {
        auto tl = build_timeline(g, p, t, 420000 + rep);
        auto traj = evolve_cbsep(g, occupancy_from_mask(3, start_mask), tl);
        ++counts[gen.space.index(mask_from_occupancy(traj.final_state))];
    }
    double chi2 = 0.0;
    int dof = -1;
    for (int i = 0; i < gen.dim(); ++i) {
        double expect = runs * exact[i];
        if (expect < 5.0) continue;  // pool tiny cells out
        chi2 += (counts[i] - expect) * (counts[i] - expect) / expect;
        ++dof;
    }
    REQUIRE(dof >= 1);
    CHECK(chi_square_sf(chi2, dof) > 0.01);
}

TEST_CASE("sigma_cov on one edge: exponential survival") {
    // from either endpoint of a single edge the cover time is the first
    // oriented arrival into the start, Exp((1-p)/(2-p))
    Graph g = make_path(2);
    double p = 0.5;
    auto curves = sigma_cov_estimate(g, p, 6000, 8);
    double rate = (1 - p) / (2 - p);
    // survival at the grid points within MC error of the exponential
    for (std::size_t i = 0; i < curves.grid.size(); i += 16) {
        double expect = std::exp(-rate * curves.grid[i]);
        if (expect < 0.02) continue;
        CHECK(curves.max_survival[i] == doctest::Approx(expect).epsilon(0.12));
    }
    // 1/e quantile of Exp(1/3) is 3
    CHECK(curves.quantile_1_over_e == doctest::Approx(3.0).epsilon(0.1));
    // t = 0: survival 1
    auto head = sigma_cov_estimate(g, p, 200, 9);
    CHECK(head.max_survival[0] <= 1.0);
}

TEST_CASE("mc hitting mean matches the restricted linear solve") {
    Graph g = make_cycle(6);
    double p = 1.0 / 6.0;
    auto exact = restricted_gap_and_hitting(g, p);
    // start from mu(. | N = 2): uniform over the 15 two-particle configs
    Rng rng(31337);
    std::vector<double> samples;
    int censored = 0;
    for (int rep = 0; rep < 3000; ++rep) {
        int a = static_cast<int>(rng.pick(6)), b;
        do {
            b = static_cast<int>(rng.pick(6));
        } while (b == a);
        Occupancy w(6, 0);
        w[a] = w[b] = 1;
        auto tl = build_timeline(g, p, 400.0, 880000 + rep);
        auto h = hitting_time_one_particle(g, w, tl);
        if (h.censored)
            ++censored;
        else
            samples.push_back(h.time);
    }
    CHECK(censored == 0);
    auto ms = mean_stderr(samples);
    // E_{mu(.|N=2)}(tau) from the dense solve restricted to the N = 2 slice:
    // here we reuse the library value only as E over N>=2; recompute the
    // N = 2 average directly
    auto gen = cbsep_generator(g, p);
    std::vector<int> sub;
    for (int i = 0; i < gen.dim(); ++i)
        if (particle_count(gen.space.state(i)) >= 2) sub.push_back(i);
    int ds = static_cast<int>(sub.size());
    Eigen::MatrixXd Lsub(ds, ds);
    for (int a2 = 0; a2 < ds; ++a2)
        for (int b2 = 0; b2 < ds; ++b2) Lsub(a2, b2) = -gen.rates.entry(sub[a2], sub[b2]);
    Eigen::VectorXd u = Lsub.fullPivLu().solve(Eigen::VectorXd::Ones(ds));
    double acc = 0.0, mass = 0.0;
    for (int a2 = 0; a2 < ds; ++a2)
        if (particle_count(gen.space.state(sub[a2])) == 2) {
            acc += u(a2);
            mass += 1.0;
        }
    double expect = acc / mass;  // uniform over the N = 2 sector
    CHECK(std::fabs(ms.mean - expect) <= 3.0 * ms.stderr_);
    CHECK(1.0 / exact.lambda0 >= exact.expected_hitting);
}
