#include "cbseplab/statespace.hpp"

#include <algorithm>
#include <cmath>

#include "cbseplab/numeric.hpp"

namespace cbsep {

namespace {

constexpr int kMaxBits = 24;

StateSpace build(int n, int radix, std::uint64_t total,
                 const std::vector<std::uint32_t>& states) {
    StateSpace s;
    s.n = n;
    s.radix = radix;
    s.states = states;
    s.lookup.assign(total, -1);
    for (int i = 0; i < s.dim(); ++i) s.lookup[s.states[i]] = i;
    return s;
}

}  // namespace

StateSpace enumerate_states(int n, StateConstraint c) {
    if (n < 1 || n > kMaxBits)
        throw std::invalid_argument("enumerate_states: need 1 <= n <= 24");
    std::uint64_t total = 1ull << n;
    std::vector<std::uint32_t> states;
    for (std::uint64_t code = 0; code < total; ++code) {
        auto mask = static_cast<std::uint32_t>(code);
        int k = particle_count(mask);
        bool keep = false;
        switch (c) {
            case StateConstraint::omega_plus: keep = k >= 1; break;
            case StateConstraint::all: keep = true; break;
            case StateConstraint::n_at_least_2: keep = k >= 2; break;
        }
        if (keep) states.push_back(mask);
    }
    return build(n, 2, total, states);
}

StateSpace enumerate_fixed_particle_count(int n, int k) {
    if (n < 1 || n > kMaxBits)
        throw std::invalid_argument("enumerate_fixed_particle_count: need 1 <= n <= 24");
    if (k < 0 || k > n)
        throw std::invalid_argument("enumerate_fixed_particle_count: need 0 <= k <= n");
    std::uint64_t total = 1ull << n;
    std::vector<std::uint32_t> states;
    for (std::uint64_t code = 0; code < total; ++code)
        if (particle_count(static_cast<std::uint32_t>(code)) == k)
            states.push_back(static_cast<std::uint32_t>(code));
    return build(n, 2, total, states);
}

double Measure::min_weight() const {
    double m = w.empty() ? 0.0 : w[0];
    for (double v : w) m = std::min(m, v);
    return m;
}

double Measure::sum() const {
    KahanSum s;
    for (double v : w) s.add(v);
    return s.value();
}

void Measure::normalize() {
    double s = sum();
    if (s <= 0.0) throw std::invalid_argument("measure: nonpositive total mass");
    for (double& v : w) v /= s;
}

Measure conditioned_bernoulli(const StateSpace& space, double p) {
    if (p <= 0.0 || p >= 1.0)
        throw std::invalid_argument("conditioned_bernoulli: need 0 < p < 1");
    Measure mu;
    mu.w.resize(space.dim());
    double lp = std::log(p), lq = std::log1p(-p);
    for (int i = 0; i < space.dim(); ++i) {
        int k = particle_count(space.state(i));
        mu.w[i] = std::exp(k * lp + (space.n - k) * lq);
    }
    mu.normalize();
    return mu;
}

std::vector<double> conditional_second_moment(const StateSpace& space, const Measure& mu,
                                              const std::vector<double>& f) {
    std::vector<double> num(space.n + 1, 0.0), den(space.n + 1, 0.0);
    for (int i = 0; i < space.dim(); ++i) {
        int k = particle_count(space.state(i));
        num[k] += mu.w[i] * f[i] * f[i];
        den[k] += mu.w[i];
    }
    std::vector<double> out(space.n + 1, 0.0);
    for (int k = 0; k <= space.n; ++k)
        if (den[k] > 0.0) out[k] = num[k] / den[k];
    return out;
}

}  // namespace cbsep
