#include "cbseplab/birthdeath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cbseplab/numeric.hpp"
#include "cbseplab/rng.hpp"

namespace cbsep {

GammaMeasure gamma_measure(int n, double p) {
    if (n < 1) throw std::invalid_argument("gamma_measure: need n >= 1");
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("gamma_measure: need 0 < p < 1");
    GammaMeasure gm;
    gm.n = n;
    gm.p = p;
    gm.logw.resize(n);
    double lp = std::log(p), lq = std::log1p(-p);
    for (int k = 1; k <= n; ++k)
        gm.logw[k - 1] = log_binomial(n, k) + k * lp + (n - k) * lq;
    double lz = log_sum_exp(gm.logw);
    for (auto& lw : gm.logw) lw -= lz;
    gm.w.resize(n);
    for (int k = 1; k <= n; ++k) gm.w[k - 1] = std::exp(gm.logw[k - 1]);
    return gm;
}

double GammaMeasure::ratio_identity_residual() const {
    // gamma(k)(1-p)k = gamma(k-1)p(n-k+1); compare in log space so the
    // identity is meaningful in the far tails as well.
    double worst = 0.0;
    for (int k = 2; k <= n; ++k) {
        double lhs = log_weight(k) + std::log1p(-p) + std::log(static_cast<double>(k));
        double rhs = log_weight(k - 1) + std::log(p) + std::log(static_cast<double>(n - k + 1));
        worst = std::max(worst, std::fabs(lhs - rhs));
    }
    return worst;
}

double bd_dirichlet(const GammaMeasure& gm, std::span<const double> g) {
    if (static_cast<int>(g.size()) != gm.n)
        throw std::invalid_argument("bd_dirichlet: g must be defined on 1..n");
    KahanSum s;
    for (int k = 2; k <= gm.n; ++k) {
        double d = g[k - 1] - g[k - 2];
        s.add(gm(k) * k * d * d);
    }
    return s.value();
}

double bd_entropy(const GammaMeasure& gm, std::span<const double> g) {
    if (static_cast<int>(g.size()) != gm.n)
        throw std::invalid_argument("bd_entropy: g must be defined on 1..n");
    KahanSum m2, ent;
    for (int k = 1; k <= gm.n; ++k) m2.add(gm(k) * g[k - 1] * g[k - 1]);
    double total = m2.value();
    if (total <= 0.0) return 0.0;
    for (int k = 1; k <= gm.n; ++k) ent.add(gm(k) * xlogx(g[k - 1] * g[k - 1]));
    return ent.value() - total * std::log(total);
}

MicloBound miclo_bound(int n, double p) {
    if (n < 2) throw std::invalid_argument("miclo_bound: need n >= 2");
    GammaMeasure gm = gamma_measure(n, p);
    int m = static_cast<int>(std::ceil(p * n));
    int i = std::max(2, m);

    // log tail masses log gamma(N >= j) and log gamma(N <= j)
    std::vector<double> log_tail_ge(n + 2), log_tail_le(n + 1);
    {
        std::vector<double> acc;
        log_tail_ge[n + 1] = -std::numeric_limits<double>::infinity();
        for (int j = n; j >= 1; --j) {
            acc.push_back(gm.log_weight(j));
            log_tail_ge[j] = log_sum_exp(acc);
        }
        acc.clear();
        for (int j = 1; j <= n; ++j) {
            acc.push_back(gm.log_weight(j));
            log_tail_le[j] = log_sum_exp(acc);
        }
    }

    MicloBound out{0.0, 0.0, 0.0};
    // C_plus: sum over k of 1/(gamma(k) c(k,k-1)) with c(k,k-1) = k.
    {
        double log_sum = -std::numeric_limits<double>::infinity();
        for (int j = i + 1; j <= n; ++j) {
            double log_term = -(gm.log_weight(j) + std::log(static_cast<double>(j)));
            log_sum = log_sum > log_term
                          ? log_sum + std::log1p(std::exp(log_term - log_sum))
                          : log_term + std::log1p(std::exp(log_sum - log_term));
            double lt = log_tail_ge[j];
            double candidate = std::exp(log_sum + lt) * std::fabs(lt);
            out.c_plus = std::max(out.c_plus, candidate);
        }
    }
    // C_minus: up rates c(k,k+1) = (n-k) p/(1-p).
    {
        double lpq = std::log(p) - std::log1p(-p);
        std::vector<double> log_cum(i, -std::numeric_limits<double>::infinity());
        // log_cum[j] = log sum_{k=j}^{i-1} 1/(gamma(k) c(k,k+1)), built from above
        double log_sum = -std::numeric_limits<double>::infinity();
        for (int j = i - 1; j >= 1; --j) {
            double log_term =
                -(gm.log_weight(j) + std::log(static_cast<double>(n - j)) + lpq);
            log_sum = log_sum > log_term
                          ? log_sum + std::log1p(std::exp(log_term - log_sum))
                          : log_term + std::log1p(std::exp(log_sum - log_term));
            double lt = log_tail_le[j];
            double candidate = std::exp(log_sum + lt) * std::fabs(lt);
            out.c_minus = std::max(out.c_minus, candidate);
        }
    }
    out.c_star = std::max(out.c_plus, out.c_minus);
    return out;
}

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_deriv(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct BdProblem {
    const GammaMeasure* gm;

    double ratio(std::span<const double> g) const {
        double d = bd_dirichlet(*gm, g);
        if (d <= 1e-300) return 0.0;
        return bd_entropy(*gm, g) / d;
    }
};

// Maximize Ent(g^2)/D(g) over nonnegative g = softplus(theta).
double ascend(const BdProblem& prob, std::vector<double> theta, int max_iter = 500) {
    int n = static_cast<int>(theta.size());
    const GammaMeasure& gm = *prob.gm;
    std::vector<double> g(n), grad(n), trial_theta(n), trial_g(n);
    auto eval = [&](const std::vector<double>& th, std::vector<double>& gout) {
        for (int k = 0; k < n; ++k) gout[k] = softplus(th[k]);
        return prob.ratio(gout);
    };
    double cur = eval(theta, g);
    double step = 0.5;
    for (int it = 0; it < max_iter; ++it) {
        double d = bd_dirichlet(gm, g);
        double e = bd_entropy(gm, g);
        if (d <= 1e-300) break;
        KahanSum m2s;
        for (int k = 1; k <= n; ++k) m2s.add(gm(k) * g[k - 1] * g[k - 1]);
        double logm2 = std::log(m2s.value());
        for (int k = 1; k <= n; ++k) {
            double ge = g[k - 1] == 0.0
                            ? 0.0
                            : 2.0 * gm(k) * g[k - 1] * (std::log(g[k - 1] * g[k - 1]) - logm2);
            double gd = 0.0;
            if (k >= 2) gd += 2.0 * gm(k) * k * (g[k - 1] - g[k - 2]);
            if (k < n) gd -= 2.0 * gm(k + 1) * (k + 1) * (g[k] - g[k - 1]);
            // gradient of Ent/D
            grad[k - 1] = ((ge * d - e * gd) / (d * d)) * softplus_deriv(theta[k - 1]);
        }
        double gn = 0.0;
        for (double x : grad) gn += x * x;
        gn = std::sqrt(gn);
        if (gn < 1e-13 * std::max(1.0, std::fabs(cur))) break;
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (int k = 0; k < n; ++k) trial_theta[k] = theta[k] + step * grad[k] / gn;
            double val = eval(trial_theta, trial_g);
            if (val > cur + 1e-15 * std::fabs(cur)) {
                theta = trial_theta;
                g = trial_g;
                cur = val;
                improved = true;
                step *= 1.6;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    return cur;
}

}  // namespace

BdLogSob bd_best_logsob(const GammaMeasure& gm, int restarts, std::uint64_t seed) {
    if (gm.n > 500) throw std::invalid_argument("bd_best_logsob: n above cap");
    BdProblem prob{&gm};
    BdLogSob out{};
    // Certified witness at g = 1_{k=1}: Ent = gamma(1) |log gamma(1)|,
    // D = 2 gamma(2).
    out.two_point_lower = gm(1) * std::fabs(gm.log_weight(1)) / (2.0 * gm(2));
    double best = out.two_point_lower;
    out.stagnated = true;
    Rng rng(derive_seed(seed, 0xbdb357ull));
    auto consider = [&](std::vector<double> theta) {
        double val = ascend(prob, std::move(theta));
        if (val > best) {
            best = val;
            out.stagnated = false;
        }
    };
    // soft approximations of step functions at k = 1 plus random starts
    {
        std::vector<double> theta(gm.n, -8.0);
        theta[0] = 3.0;
        consider(std::move(theta));
    }
    {
        std::vector<double> theta(gm.n);
        for (int k = 0; k < gm.n; ++k) theta[k] = 2.0 - 2.0 * k;
        consider(std::move(theta));
    }
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> theta(gm.n);
        for (auto& x : theta) x = rng.normal() * 2.0 - 1.0;
        consider(std::move(theta));
    }
    out.witness = best;
    return out;
}

}  // namespace cbsep
