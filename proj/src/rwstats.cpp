#include "cbseplab/rwstats.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbseplab/numeric.hpp"
#include "cbseplab/rng.hpp"

namespace cbsep {

namespace {

Eigen::MatrixXd lazy_kernel(const Graph& g) {
    int n = g.vertex_count();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int x = 0; x < n; ++x) {
        P(x, x) = 0.5;
        for (int y : g.neighbors(x)) P(x, y) = 0.5 / g.degree(x);
    }
    return P;
}

double worst_tv(const Eigen::MatrixXd& Pt, const Eigen::VectorXd& pi) {
    double worst = 0.0;
    for (int x = 0; x < Pt.rows(); ++x)
        worst = std::max(worst, 0.5 * (Pt.row(x).transpose() - pi).cwiseAbs().sum());
    return worst;
}

}  // namespace

long long lazy_mixing_time(const Graph& g, double threshold, long long max_steps) {
    int n = g.vertex_count();
    if (n > 2000) throw std::invalid_argument("lazy_mixing_time: n above the exact cap");
    Eigen::VectorXd pi(n);
    for (int x = 0; x < n; ++x) pi(x) = static_cast<double>(g.degree(x));
    pi /= pi.sum();
    Eigen::MatrixXd P = lazy_kernel(g);
    if (worst_tv(Eigen::MatrixXd::Identity(n, n), pi) <= threshold) return 0;

    // Repeated squaring to bracket, then binary search assembling P^t from
    // the stored squarings.
    std::vector<Eigen::MatrixXd> squarings{P};  // P^(2^j)
    long long hi = 1;
    while (worst_tv(squarings.back(), pi) > threshold) {
        if (hi > max_steps) throw std::runtime_error("lazy_mixing_time: step cap exceeded");
        squarings.push_back(squarings.back() * squarings.back());
        hi *= 2;
    }
    if (hi == 1) return 1;
    auto power = [&](long long t) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n, n);
        for (std::size_t j = 0; j < squarings.size(); ++j)
            if (t & (1LL << j)) acc = acc * squarings[j];
        return acc;
    };
    long long lo = hi / 2;  // TV(lo) > threshold
    while (hi - lo > 1) {
        long long mid = lo + (hi - lo) / 2;
        (worst_tv(power(mid), pi) > threshold ? lo : hi) = mid;
    }
    return hi;
}

namespace {

MeetingTime meeting_time_mc(const Graph& g, int mc_samples, std::uint64_t seed) {
    int n = g.vertex_count();
    std::vector<double> samples;
    samples.reserve(mc_samples);
    for (int rep = 0; rep < mc_samples; ++rep) {
        Rng rng(derive_seed(seed, 0x3ee7ull, rep));
        int a = static_cast<int>(rng.pick(n));
        int b = static_cast<int>(rng.pick(n));
        double t = 0.0;
        while (a != b) {
            double total = g.degree(a) + g.degree(b);
            t += rng.exponential(total);
            double u = rng.uniform() * total;
            if (u < g.degree(a)) {
                const auto& nb = g.neighbors(a);
                a = nb[rng.pick(nb.size())];
            } else {
                const auto& nb = g.neighbors(b);
                b = nb[rng.pick(nb.size())];
            }
        }
        samples.push_back(t);
    }
    auto ms = mean_stderr(samples);
    return {ms.mean, false, ms.stderr_};
}

}  // namespace

MeetingTime expected_meeting_time(const Graph& g, int mc_samples, std::uint64_t seed) {
    int n = g.vertex_count();
    if (n > 300) return meeting_time_mc(g, mc_samples, seed);
    // Product chain on ordered pairs, jump rate 1 along each edge for each
    // walker, diagonal absorbing. The plain (unweighted) generator is
    // symmetric, so the restriction to off-diagonal states is positive
    // definite and CG applies directly.
    int d = n * n - n;
    std::vector<int> idx(n * n, -1);
    std::vector<std::pair<int, int>> states;
    states.reserve(d);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) {
                idx[a * n + b] = static_cast<int>(states.size());
                states.emplace_back(a, b);
            }
    std::vector<Eigen::Triplet<double>> trip;
    for (int s = 0; s < d; ++s) {
        auto [a, b] = states[s];
        trip.emplace_back(s, s, static_cast<double>(g.degree(a) + g.degree(b)));
        for (int a2 : g.neighbors(a))
            if (a2 != b) trip.emplace_back(s, idx[a2 * n + b], -1.0);
        for (int b2 : g.neighbors(b))
            if (b2 != a) trip.emplace_back(s, idx[a * n + b2], -1.0);
    }
    Eigen::SparseMatrix<double> A(d, d);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(d);
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(40LL * d);
    cg.compute(A);
    Eigen::VectorXd u = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
        throw std::runtime_error("expected_meeting_time: CG did not converge");
    // uniform independent starts, diagonal contributing zero
    double total = u.sum() / static_cast<double>(n) / static_cast<double>(n);
    return {total, true, 0.0};
}

CoverTimeEstimate cover_time_quantile(const Graph& g, int samples, std::uint64_t seed) {
    if (samples < 100) throw std::invalid_argument("cover_time_quantile: need samples >= 100");
    int n = g.vertex_count();
    CoverTimeEstimate out;
    out.samples.assign(n, {});
    if (n == 1) {
        out.quantile = 0.0;
        out.band_lo = out.band_hi = 0.0;
        return out;
    }
    for (int v = 0; v < n; ++v) {
        out.samples[v].reserve(samples);
        for (int rep = 0; rep < samples; ++rep) {
            Rng rng(derive_seed(seed, 0xc04e2ull, v, rep));
            std::vector<char> visited(n, 0);
            visited[v] = 1;
            int covered = 1, pos = v;
            long long steps = 0;
            while (covered < n) {
                const auto& nb = g.neighbors(pos);
                pos = nb[rng.pick(nb.size())];
                ++steps;
                if (!visited[pos]) {
                    visited[pos] = 1;
                    ++covered;
                }
            }
            out.samples[v].push_back(static_cast<double>(steps));
        }
    }
    std::size_t k = static_cast<std::size_t>(
        std::ceil(samples * (1.0 - std::exp(-1.0)) - 1e-12));
    k = std::max<std::size_t>(1, std::min<std::size_t>(k, samples));
    double q = 0.0;
    int argmax = 0;
    for (int v = 0; v < n; ++v) {
        std::vector<double> sorted = out.samples[v];
        std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
        if (sorted[k - 1] > q) {
            q = sorted[k - 1];
            argmax = v;
        }
    }
    out.quantile = q;
    // binomial band: quantile order statistics at Wilson-adjusted ranks of
    // the worst start
    auto band = wilson_interval(k, samples);
    std::vector<double> sorted = out.samples[argmax];
    std::sort(sorted.begin(), sorted.end());
    auto at_quantile = [&](double frac) {
        std::size_t r = static_cast<std::size_t>(
            std::min<double>(samples - 1.0, std::max(0.0, std::ceil(frac * samples) - 1.0)));
        return sorted[r];
    };
    out.band_lo = at_quantile(band.lo);
    out.band_hi = at_quantile(band.hi);
    return out;
}

}  // namespace cbsep
