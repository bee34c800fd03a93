#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cbsep {

/// Binomial(n,p) conditioned to be positive; the law of the particle count.
struct GammaMeasure {
    int n = 0;
    double p = 0.0;
    std::vector<double> w;     // weights for k = 1..n at index k-1
    std::vector<double> logw;  // exact log-space weights

    double operator()(int k) const { return w[k - 1]; }
    double log_weight(int k) const { return logw[k - 1]; }
    // gamma(k)(1-p)k - gamma(k-1)p(n-k+1), worst over k, relative
    double ratio_identity_residual() const;
};

GammaMeasure gamma_measure(int n, double p);

// Dirichlet form of the birth-death chain with down rates c(k,k-1) = k and
// up rates c(k,k+1) = (n-k) p/(1-p): sum_{k>=2} gamma(k) k [g(k)-g(k-1)]^2.
double bd_dirichlet(const GammaMeasure& gm, std::span<const double> g);

// Ent_gamma(g^2).
double bd_entropy(const GammaMeasure& gm, std::span<const double> g);

struct MicloBound {
    double c_plus;
    double c_minus;
    double c_star;
};

// Hardy-type quantities controlling the chain's log-Sobolev constant, with
// pivot i = max(2, ceil(p n)); empty index ranges contribute 0.
MicloBound miclo_bound(int n, double p);

struct BdLogSob {
    double witness;          // best Ent(g^2)/D(g) found; lower bound on the constant
    double two_point_lower;  // certified value at g = 1_{k=1}
    bool stagnated;
};

BdLogSob bd_best_logsob(const GammaMeasure& gm, int restarts = 12,
                        std::uint64_t seed = 77);

}  // namespace cbsep
