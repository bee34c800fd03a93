#include <doctest.h>

#include "cbseplab/electrical.hpp"
#include "cbseplab/rng.hpp"
#include "oracles.hpp"

using namespace cbsep;

namespace {

std::vector<std::pair<int, int>> edge_pairs(const Graph& g) {
    std::vector<std::pair<int, int>> out;
    for (const auto& e : g.edges()) out.emplace_back(e.u, e.v);
    return out;
}

int graph_distance(const Graph& g, int x, int y) {
    std::vector<int> dist(g.vertex_count(), -1);
    std::vector<int> q{x};
    dist[x] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
        int a = q[h];
        for (int b : g.neighbors(a))
            if (dist[b] < 0) {
                dist[b] = dist[a] + 1;
                q.push_back(b);
            }
    }
    return dist[y];
}

}  // namespace

TEST_CASE("path endpoints: resistance equals graph distance") {
    Graph g = make_path(4);
    CHECK(effective_resistance(g, 0, 3) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(effective_resistance(g, 1, 1) == 0.0);
}

TEST_CASE("cycle(4) adjacent resistance, frozen against the pseudoinverse oracle") {
    Graph g = make_cycle(4);
    double r = effective_resistance(g, 0, 1);
    CHECK(r == doctest::Approx(0.75).epsilon(1e-12));  // frozen oracle value
    auto R = oracle::resistance_pinv(4, edge_pairs(g));
    CHECK(r == doctest::Approx(R(0, 1)).epsilon(1e-12));
}

TEST_CASE("optimal flow: single edge and cycle(4) currents") {
    Graph p2 = make_path(2);
    Flow f = optimal_flow(p2, 0, 1);
    CHECK(f.theta[0] == doctest::Approx(1.0));
    CHECK(flow_energy(p2, f) == doctest::Approx(1.0));

    // Kirchhoff solve by hand for the 4-cycle, unit current 0 -> 1:
    // 3/4 through the direct edge, 1/4 through each edge of the long arc.
    Graph c4 = make_cycle(4);
    Flow g = optimal_flow(c4, 0, 1);
    CHECK(g.is_unit_flow(c4, 1e-10));
    for (int k = 0; k < c4.edge_count(); ++k) {
        double expect = c4.edge_index(0, 1) == k ? 0.75 : 0.25;
        CHECK(std::fabs(g.theta[k]) == doctest::Approx(expect).epsilon(1e-10));
    }
    CHECK(flow_energy(c4, g) ==
          doctest::Approx(effective_resistance(c4, 0, 1)).epsilon(1e-10));
}

TEST_CASE("flow energy basics") {
    Graph p4 = make_path(4);
    Flow zero{0, 0, std::vector<double>(3, 0.0)};
    CHECK(flow_energy(p4, zero) == 0.0);
    // unit flow along the path: energy equals the path length
    Flow unit{0, 3, {1.0, 1.0, 1.0}};
    CHECK(unit.is_unit_flow(p4, 1e-12));
    CHECK(flow_energy(p4, unit) == doctest::Approx(3.0));
}

TEST_CASE("thomson principle: random unit flows never beat the current flow") {
    Rng rng(7);
    for (const Graph& g : {make_cycle(6), make_complete(5), make_torus(3, 2)}) {
        int x = 0, y = g.vertex_count() / 2;
        double r = effective_resistance(g, x, y);
        Flow best = optimal_flow(g, x, y);
        CHECK(flow_energy(g, best) == doctest::Approx(r).epsilon(1e-10));
        // random flows = optimal flow + random circulation around fundamental
        // cycles of a spanning tree
        std::vector<int> parent(g.vertex_count(), -1), order{0};
        std::vector<char> seen(g.vertex_count(), 0);
        seen[0] = 1;
        for (std::size_t h = 0; h < order.size(); ++h)
            for (int b : g.neighbors(order[h]))
                if (!seen[b]) {
                    seen[b] = 1;
                    parent[b] = order[h];
                    order.push_back(b);
                }
        std::vector<char> tree_edge(g.edge_count(), 0);
        for (int v = 1; v < g.vertex_count(); ++v)
            tree_edge[g.edge_index(v, parent[v])] = 1;
        for (int rep = 0; rep < 100; ++rep) {
            Flow f = best;
            for (int k = 0; k < g.edge_count(); ++k) {
                if (tree_edge[k]) continue;
                double c = rng.normal();
                // push c around the fundamental cycle of non-tree edge k
                auto [u, v] = std::pair{g.edges()[k].u, g.edges()[k].v};
                f.theta[k] += c;
                // walk v -> root and u -> root adjusting tree edges
                auto push_up = [&](int node, double amount) {
                    while (parent[node] >= 0) {
                        int e = g.edge_index(node, parent[node]);
                        double sign = g.edges()[e].u == node ? 1.0 : -1.0;
                        f.theta[e] += sign * amount;
                        node = parent[node];
                    }
                };
                push_up(v, c);    // return current from v up to the root
                push_up(u, -c);   // and from the root down to u
            }
            REQUIRE(f.is_unit_flow(g, 1e-8));
            CHECK(flow_energy(g, f) >= r - 1e-10);
        }
    }
}

TEST_CASE("resistance profile matches per-pair solves and known families") {
    for (int n : {3, 4, 5}) {
        auto prof = resistance_profile(make_complete(n));
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                double expect = x == y ? 0.0 : 2.0 / n;  // frozen oracle value
                CHECK(prof.R(x, y) == doctest::Approx(expect).epsilon(1e-10));
            }
    }
    Graph p6 = make_path(6);
    auto prof = resistance_profile(p6);
    // tree: resistance equals graph distance, so Rbar peaks at the endpoint
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y)
            CHECK(prof.R(x, y) == doctest::Approx(graph_distance(p6, x, y)).epsilon(1e-10));
    CHECK(prof.r_bar_max == doctest::Approx((6 - 1) / 2.0).epsilon(1e-10));
    CHECK(prof.r_bar[0] == doctest::Approx(prof.r_bar_max));

    Graph c6 = make_cycle(6);
    auto pc = resistance_profile(c6);
    for (int x = 0; x < 6; ++x) {
        CHECK(pc.R(x, x) == 0.0);
        for (int y = 0; y < 6; ++y) {
            CHECK(pc.R(x, y) == doctest::Approx(pc.R(y, x)));
            CHECK(pc.R(x, y) ==
                  doctest::Approx(effective_resistance(c6, x, y)).epsilon(1e-10));
            CHECK(pc.R(x, y) <= graph_distance(c6, x, y) + 1e-10);
        }
    }
}

TEST_CASE("removing an edge never decreases resistance") {
    Graph g = make_cycle(5);
    auto before = resistance_profile(g);
    // drop edge {0,1}; the remaining path is still connected
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : g.edges())
        if (!(e.u == 0 && e.v == 1)) edges.emplace_back(e.u, e.v);
    Graph h = Graph::from_edges(5, edges);
    auto after = resistance_profile(h);
    for (int x = 0; x < 5; ++x)
        for (int y = 0; y < 5; ++y) CHECK(after.R(x, y) >= before.R(x, y) - 1e-10);
}

TEST_CASE("hypercube profile is vertex-transitive and decreasing in dimension") {
    double prev = 1e9;
    for (int d = 2; d <= 7; ++d) {
        auto prof = resistance_profile(make_hypercube(d));
        for (double rb : prof.r_bar) CHECK(rb == doctest::Approx(prof.r_bar_max).epsilon(1e-9));
        CHECK(prof.r_bar_max < prev);
        prev = prof.r_bar_max;
    }
}

TEST_CASE("commute time identity against Monte Carlo") {
    {
        auto c = commute_time_check(make_path(2), 0, 1, 200, 11);
        CHECK(c.exact == doctest::Approx(2.0));
        CHECK(c.estimate == doctest::Approx(2.0));  // single edge: always 2 steps
    }
    {
        auto c = commute_time_check(make_cycle(4), 0, 1, 4000, 12);
        CHECK(c.exact == doctest::Approx(6.0).epsilon(1e-12));  // 2*4*(3/4), frozen
        CHECK(std::fabs(c.estimate - c.exact) <= 3.0 * c.stderr_);
    }
    {
        auto c = commute_time_check(make_complete(3), 0, 2, 4000, 13);
        CHECK(c.exact == doctest::Approx(4.0).epsilon(1e-12));  // 2*3*(2/3), frozen
        CHECK(std::fabs(c.estimate - c.exact) <= 3.0 * c.stderr_);
    }
}
