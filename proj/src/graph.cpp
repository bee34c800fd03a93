#include "cbseplab/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cbseplab/rng.hpp"

namespace cbsep {

namespace {

bool connected(int n, const std::vector<std::vector<int>>& adj) {
    if (n == 0) return false;
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int x = q.front();
        q.pop();
        for (int y : adj[x]) {
            if (!seen[y]) {
                seen[y] = 1;
                ++count;
                q.push(y);
            }
        }
    }
    return count == n;
}

}  // namespace

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
    if (n < 1) throw std::invalid_argument("graph: need at least one vertex");
    std::set<std::pair<int, int>> seen;
    Graph g;
    g.n_ = n;
    g.adj_.assign(n, {});
    for (auto [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::invalid_argument("graph: vertex index out of range");
        if (u == v) throw std::invalid_argument("graph: loops not allowed");
        if (u > v) std::swap(u, v);
        if (!seen.insert({u, v}).second)
            throw std::invalid_argument("graph: duplicate edge");
    }
    for (auto [u, v] : seen) {
        g.edges_.push_back({u, v});
        g.adj_[u].push_back(v);
        g.adj_[v].push_back(u);
    }
    for (auto& nb : g.adj_) std::sort(nb.begin(), nb.end());
    if (!connected(n, g.adj_)) throw std::invalid_argument("graph: not connected");
    return g;
}

int Graph::edge_index(int x, int y) const {
    if (x > y) std::swap(x, y);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{x, y},
                               [](const Edge& a, const Edge& b) {
                                   return a.u != b.u ? a.u < b.u : a.v < b.v;
                               });
    if (it != edges_.end() && it->u == x && it->v == y)
        return static_cast<int>(it - edges_.begin());
    return -1;
}

Eigen::MatrixXd Graph::laplacian() const {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n_, n_);
    for (const auto& e : edges_) {
        L(e.u, e.u) += 1.0;
        L(e.v, e.v) += 1.0;
        L(e.u, e.v) -= 1.0;
        L(e.v, e.u) -= 1.0;
    }
    return L;
}

std::string Graph::to_edge_list() const {
    std::ostringstream out;
    out << n_ << ' ' << edge_count() << '\n';
    for (const auto& e : edges_) out << e.u << ' ' << e.v << '\n';
    return out.str();
}

Graph Graph::from_edge_list(std::string_view text) {
    std::istringstream in{std::string(text)};
    int n = 0, m = 0;
    if (!(in >> n >> m)) throw std::invalid_argument("edge list: bad header");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(m);
    for (int i = 0; i < m; ++i) {
        int u, v;
        if (!(in >> u >> v)) throw std::invalid_argument("edge list: truncated");
        edges.emplace_back(u, v);
    }
    return from_edges(n, std::move(edges));
}

DegreeStats degree_stats(const Graph& g) {
    int dmin = g.vertex_count(), dmax = 0;
    for (int x = 0; x < g.vertex_count(); ++x) {
        dmin = std::min(dmin, g.degree(x));
        dmax = std::max(dmax, g.degree(x));
    }
    long long num = 2LL * g.edge_count();
    long long den = g.vertex_count();
    long long gcd = std::gcd(num, den);
    if (gcd > 0) {
        num /= gcd;
        den /= gcd;
    }
    return {dmin, dmax, num, den, static_cast<double>(num) / static_cast<double>(den)};
}

Graph make_path(int n) {
    if (n < 2) throw std::invalid_argument("path: need n >= 2");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph::from_edges(n, std::move(e));
}

Graph make_cycle(int n) {
    if (n < 3) throw std::invalid_argument("cycle: need n >= 3");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph::from_edges(n, std::move(e));
}

Graph make_complete(int n) {
    if (n < 2) throw std::invalid_argument("complete: need n >= 2");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph::from_edges(n, std::move(e));
}

Graph make_hypercube(int d) {
    if (d < 1 || d > 24) throw std::invalid_argument("hypercube: need 1 <= d <= 24");
    int n = 1 << d;
    std::vector<std::pair<int, int>> e;
    for (int x = 0; x < n; ++x)
        for (int b = 0; b < d; ++b) {
            int y = x ^ (1 << b);
            if (x < y) e.emplace_back(x, y);
        }
    return Graph::from_edges(n, std::move(e));
}

Graph make_torus(int L, int d) {
    if (L < 2 || d < 1) throw std::invalid_argument("torus: need L >= 2, d >= 1");
    long long n = 1;
    for (int i = 0; i < d; ++i) {
        n *= L;
        if (n > (1 << 26)) throw std::invalid_argument("torus: too large");
    }
    auto coord_shift = [&](int x, int dim, int delta) {
        long long base = 1;
        for (int i = 0; i < dim; ++i) base *= L;
        int c = static_cast<int>((x / base) % L);
        int cc = (c + delta + L) % L;
        return static_cast<int>(x + (cc - c) * base);
    };
    // L = 2 would produce the same neighbour in both directions; from_edges
    // rejects duplicates, so collect into a set first.
    std::set<std::pair<int, int>> e;
    for (int x = 0; x < n; ++x)
        for (int dim = 0; dim < d; ++dim) {
            int y = coord_shift(x, dim, 1);
            e.insert({std::min(x, y), std::max(x, y)});
        }
    return Graph::from_edges(static_cast<int>(n),
                             std::vector<std::pair<int, int>>(e.begin(), e.end()));
}

Graph make_bary_tree(int b, int depth) {
    if (b < 2 || depth < 1) throw std::invalid_argument("bary_tree: need b >= 2, depth >= 1");
    std::vector<std::pair<int, int>> e;
    int next = 1;
    std::vector<int> level{0};
    for (int lev = 0; lev < depth; ++lev) {
        std::vector<int> nxt;
        for (int parent : level)
            for (int c = 0; c < b; ++c) {
                e.emplace_back(parent, next);
                nxt.push_back(next++);
            }
        level = std::move(nxt);
        if (next > (1 << 24)) throw std::invalid_argument("bary_tree: too large");
    }
    return Graph::from_edges(next, std::move(e));
}

Graph make_random_regular(int d, int n, std::uint64_t seed) {
    if (d < 1 || n < d + 1) throw std::invalid_argument("random_regular: need n > d >= 1");
    if ((static_cast<long long>(d) * n) % 2 != 0)
        throw std::invalid_argument("random_regular: d*n must be even");
    Rng rng(derive_seed(seed, 0x7265677561725ull));
    const int max_retries = 10000;
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        // Pairing model: d half-edges per vertex, random perfect matching.
        std::vector<int> stubs;
        stubs.reserve(static_cast<std::size_t>(d) * n);
        for (int x = 0; x < n; ++x)
            for (int i = 0; i < d; ++i) stubs.push_back(x);
        for (std::size_t i = stubs.size(); i > 1; --i)
            std::swap(stubs[i - 1], stubs[rng.pick(i)]);
        std::set<std::pair<int, int>> edges;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int u = stubs[i], v = stubs[i + 1];
            if (u == v) {
                ok = false;
                break;
            }
            if (u > v) std::swap(u, v);
            if (!edges.insert({u, v}).second) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        try {
            return Graph::from_edges(n, std::vector<std::pair<int, int>>(edges.begin(), edges.end()));
        } catch (const std::invalid_argument&) {
            continue;  // disconnected draw
        }
    }
    throw std::runtime_error("random_regular: retry budget exhausted");
}

Graph graph_from_spec(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("graph spec: expected 'family:params'");
    std::string family = spec.substr(0, colon);
    std::string params = spec.substr(colon + 1);
    auto ints = [&]() {
        std::vector<long long> out;
        std::string cur;
        for (char ch : params + "x") {
            if (ch == 'x') {
                if (cur.empty()) throw std::invalid_argument("graph spec: bad params");
                out.push_back(std::stoll(cur));
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        return out;
    };
    if (family == "file") {
        std::ifstream in(params);
        if (!in) throw std::invalid_argument("graph spec: cannot open " + params);
        std::stringstream buf;
        buf << in.rdbuf();
        return Graph::from_edge_list(buf.str());
    }
    auto v = ints();
    auto need = [&](std::size_t k) {
        if (v.size() != k) throw std::invalid_argument("graph spec: wrong parameter count for " + family);
    };
    if (family == "path") {
        need(1);
        return make_path(static_cast<int>(v[0]));
    }
    if (family == "cycle") {
        need(1);
        return make_cycle(static_cast<int>(v[0]));
    }
    if (family == "complete") {
        need(1);
        return make_complete(static_cast<int>(v[0]));
    }
    if (family == "hypercube") {
        need(1);
        return make_hypercube(static_cast<int>(v[0]));
    }
    if (family == "torus") {
        need(2);
        return make_torus(static_cast<int>(v[0]), static_cast<int>(v[1]));
    }
    if (family == "barytree") {
        need(2);
        return make_bary_tree(static_cast<int>(v[0]), static_cast<int>(v[1]));
    }
    if (family == "rr") {
        need(3);
        return make_random_regular(static_cast<int>(v[0]), static_cast<int>(v[1]),
                                   static_cast<std::uint64_t>(v[2]));
    }
    throw std::invalid_argument("graph spec: unknown family " + family);
}

}  // namespace cbsep
