#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbsep {

/// Finite simple connected undirected graph. Vertices are 0..n-1, edges are
/// stored with the smaller endpoint first; oriented edges are derived from
/// the edge list, never stored independently.
class Graph {
public:
    struct Edge {
        int u, v;  // u < v
    };

    // Validates simplicity and connectivity; normalizes edge order.
    static Graph from_edges(int n, std::vector<std::pair<int, int>> edges);

    int vertex_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int oriented_count() const { return 2 * edge_count(); }

    const std::vector<Edge>& edges() const { return edges_; }

    // Oriented edge k: for k < m the pair (u,v) of edge k, for k >= m the
    // reversed pair of edge k-m.
    std::pair<int, int> oriented(int k) const {
        int m = edge_count();
        return k < m ? std::pair<int, int>{edges_[k].u, edges_[k].v}
                     : std::pair<int, int>{edges_[k - m].v, edges_[k - m].u};
    }

    const std::vector<int>& neighbors(int x) const { return adj_[x]; }
    int degree(int x) const { return static_cast<int>(adj_[x].size()); }

    // Index into edges() for {x,y}, or -1 if not an edge.
    int edge_index(int x, int y) const;

    Eigen::MatrixXd laplacian() const;

    // Edge-list text format: first line "n m", then m lines "u v".
    std::string to_edge_list() const;
    static Graph from_edge_list(std::string_view text);

private:
    Graph() = default;
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adj_;
};

struct DegreeStats {
    int d_min;
    int d_max;
    // d_avg = 2|E|/n as an exact rational plus its double value.
    long long d_avg_num;
    long long d_avg_den;
    double d_avg;
};

DegreeStats degree_stats(const Graph& g);

Graph make_path(int n);
Graph make_cycle(int n);
Graph make_complete(int n);
Graph make_hypercube(int d);
Graph make_torus(int L, int d);
// Complete b-ary tree: the root has b children, every internal vertex has b
// children, leaves at the given depth.
Graph make_bary_tree(int b, int depth);
// Pairing model with rejection of loops/multi-edges and a connectivity
// check; deterministic given the seed.
Graph make_random_regular(int d, int n, std::uint64_t seed);

// Text form used by the CLI, e.g. "cycle:8", "path:5", "torus:4x2",
// "hypercube:3", "complete:5", "barytree:2x3", "rr:3x8x7" (d,n,seed),
// "file:PATH".
Graph graph_from_spec(const std::string& spec);

}  // namespace cbsep
