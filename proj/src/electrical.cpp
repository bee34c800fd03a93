#include "cbseplab/electrical.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "cbseplab/numeric.hpp"
#include "cbseplab/rng.hpp"

namespace cbsep {

double Flow::divergence(const Graph& g, int x) const {
    double s = 0.0;
    int m = g.edge_count();
    for (int k = 0; k < m; ++k) {
        const auto& e = g.edges()[k];
        if (e.u == x) s += theta[k];
        if (e.v == x) s -= theta[k];
    }
    return s;
}

bool Flow::is_unit_flow(const Graph& g, double tol) const {
    for (int x = 0; x < g.vertex_count(); ++x) {
        double expect = x == source ? 1.0 : (x == sink ? -1.0 : 0.0);
        if (source == sink) expect = 0.0;
        if (std::fabs(divergence(g, x) - expect) > tol) return false;
    }
    return true;
}

double flow_energy(const Graph& g, const Flow& f) {
    // (1/2) sum over oriented edges = sum over edges.
    double s = 0.0;
    for (double t : f.theta) s += t * t;
    (void)g;
    return s;
}

namespace {

// Solve the potential problem with unit current injected at x and
// extracted at y, vertex `ground` pinned to zero.
Eigen::VectorXd potentials(const Graph& g, int x, int y) {
    int n = g.vertex_count();
    Eigen::MatrixXd L = g.laplacian();
    // Ground vertex 0: drop its row/column.
    Eigen::MatrixXd L0 = L.bottomRightCorner(n - 1, n - 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
    if (x != 0) b(x - 1) += 1.0;
    if (y != 0) b(y - 1) -= 1.0;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(L0);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("effective_resistance: singular grounded Laplacian");
    Eigen::VectorXd phi0 = ldlt.solve(b);
    Eigen::VectorXd phi(n);
    phi(0) = 0.0;
    phi.tail(n - 1) = phi0;
    return phi;
}

}  // namespace

double effective_resistance(const Graph& g, int x, int y) {
    if (x == y) return 0.0;
    Eigen::VectorXd phi = potentials(g, x, y);
    return phi(x) - phi(y);
}

Flow optimal_flow(const Graph& g, int x, int y) {
    Flow f;
    f.source = x;
    f.sink = y;
    f.theta.assign(g.edge_count(), 0.0);
    if (x == y) return f;
    Eigen::VectorXd phi = potentials(g, x, y);
    for (int k = 0; k < g.edge_count(); ++k) {
        const auto& e = g.edges()[k];
        f.theta[k] = phi(e.u) - phi(e.v);
    }
    return f;
}

ResistanceProfile resistance_profile(const Graph& g) {
    int n = g.vertex_count();
    ResistanceProfile out;
    out.R = Eigen::MatrixXd::Zero(n, n);
    if (n > 1) {
        Eigen::MatrixXd L0 = g.laplacian().bottomRightCorner(n - 1, n - 1);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(L0);
        Eigen::MatrixXd M = ldlt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
        // With ground at 0: R(x,y) = M(x,x) + M(y,y) - 2 M(x,y), indices
        // shifted by one; R(0,y) = M(y,y).
        for (int x = 0; x < n; ++x)
            for (int y = x + 1; y < n; ++y) {
                double r;
                if (x == 0)
                    r = M(y - 1, y - 1);
                else
                    r = M(x - 1, x - 1) + M(y - 1, y - 1) - 2.0 * M(x - 1, y - 1);
                out.R(x, y) = r;
                out.R(y, x) = r;
            }
    }
    out.r_bar.assign(n, 0.0);
    out.r_bar_max = 0.0;
    for (int y = 0; y < n; ++y) {
        out.r_bar[y] = out.R.col(y).sum() / n;
        out.r_bar_max = std::max(out.r_bar_max, out.r_bar[y]);
    }
    return out;
}

CommuteCheck commute_time_check(const Graph& g, int x, int y, int mc_samples,
                                std::uint64_t seed) {
    if (x == y) throw std::invalid_argument("commute_time_check: need x != y");
    double exact = 2.0 * g.edge_count() * effective_resistance(g, x, y);
    std::vector<double> samples;
    samples.reserve(mc_samples);
    for (int rep = 0; rep < mc_samples; ++rep) {
        Rng rng(derive_seed(seed, 0xc0337u, rep));
        long long steps = 0;
        int pos = x;
        // x -> y
        while (pos != y) {
            const auto& nb = g.neighbors(pos);
            pos = nb[rng.pick(nb.size())];
            ++steps;
        }
        // y -> x
        while (pos != x) {
            const auto& nb = g.neighbors(pos);
            pos = nb[rng.pick(nb.size())];
            ++steps;
        }
        samples.push_back(static_cast<double>(steps));
    }
    auto ms = mean_stderr(samples);
    return {exact, ms.mean, ms.stderr_};
}

}  // namespace cbsep
