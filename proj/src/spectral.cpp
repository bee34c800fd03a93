#include "cbseplab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cbseplab/eigs.hpp"
#include "cbseplab/numeric.hpp"
#include "cbseplab/rng.hpp"

namespace cbsep {

double entropy_f2(const Measure& mu, const std::vector<double>& f) {
    KahanSum m2, ent;
    for (std::size_t i = 0; i < f.size(); ++i) m2.add(mu.w[i] * f[i] * f[i]);
    double total = m2.value();
    if (total <= 0.0) return 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) ent.add(mu.w[i] * xlogx(f[i] * f[i]));
    return ent.value() - total * std::log(total);
}

double variance(const Measure& mu, const std::vector<double>& f) {
    KahanSum m1, m2;
    for (std::size_t i = 0; i < f.size(); ++i) {
        m1.add(mu.w[i] * f[i]);
        m2.add(mu.w[i] * f[i] * f[i]);
    }
    return m2.value() - m1.value() * m1.value();
}

namespace {

// Uniformization kernel K = I + L/lambda and rate lambda.
struct Uniformized {
    SparseMatrixCSR K;
    double lambda;
};

Uniformized uniformize(const SparseGenerator& gen) {
    double lambda = gen.max_exit_rate() * 1.01;
    Uniformized u;
    u.lambda = lambda;
    if (lambda <= 0.0) {  // chain never moves
        u.lambda = 0.0;
        return u;
    }
    std::vector<std::pair<int, double>> row;
    u.K.cols = gen.dim();
    for (int r = 0; r < gen.dim(); ++r) {
        row.clear();
        bool have_diag = false;
        for (int k = gen.rates.rowptr[r]; k < gen.rates.rowptr[r + 1]; ++k) {
            int c = gen.rates.col[k];
            double v = gen.rates.val[k] / lambda;
            if (c == r) {
                row.emplace_back(c, 1.0 + v);
                have_diag = true;
            } else {
                row.emplace_back(c, v);
            }
        }
        if (!have_diag) row.emplace_back(r, 1.0);
        u.K.append_row(row);
    }
    return u;
}

// y = K^T x (row-vector evolution).
void multiply_transpose(const SparseMatrixCSR& K, const std::vector<double>& x,
                        std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int r = 0; r < K.rows; ++r) {
        double xr = x[r];
        if (xr == 0.0) continue;
        for (int k = K.rowptr[r]; k < K.rowptr[r + 1]; ++k) y[K.col[k]] += K.val[k] * xr;
    }
}

double log_poisson_pmf(int k, double lt) {
    return k * std::log(lt) - lt - std::lgamma(k + 1.0);
}

}  // namespace

std::vector<double> semigroup(const SparseGenerator& gen, double t,
                              const std::vector<double>& initial) {
    if (t < 0.0) throw std::invalid_argument("semigroup: need t >= 0");
    if (static_cast<int>(initial.size()) != gen.dim())
        throw std::invalid_argument("semigroup: dimension mismatch");
    Uniformized u = uniformize(gen);
    if (t == 0.0 || u.lambda == 0.0) return initial;
    double lt = u.lambda * t;
    std::vector<double> acc(gen.dim(), 0.0), cur = initial, next(gen.dim());
    double tail = 1.0;  // remaining Poisson mass
    long long kmax = static_cast<long long>(lt + 12.0 * std::sqrt(lt) + 60.0);
    for (long long k = 0; k <= kmax; ++k) {
        double w = std::exp(log_poisson_pmf(static_cast<int>(k), lt));
        if (w > 0.0)
            for (int i = 0; i < gen.dim(); ++i) acc[i] += w * cur[i];
        tail -= w;
        if (tail < 1e-14) break;
        multiply_transpose(u.K, cur, next);
        cur.swap(next);
    }
    return acc;
}

namespace {

// Spectral decomposition of S = D^{1/2}(-L)D^{-1/2} for exact t-evaluation
// of all transition rows.
struct SpectralDecomp {
    Eigen::VectorXd theta;     // eigenvalues of -L, ascending
    Eigen::MatrixXd U;         // orthonormal eigenvectors of S
    Eigen::VectorXd sqrt_mu;
    const Measure* mu;

    // P_t rows for the requested starts.
    Eigen::MatrixXd rows(double t, const std::vector<int>& starts) const {
        Eigen::VectorXd decay = (-t * theta.array()).exp();
        Eigen::MatrixXd Ud = U * decay.asDiagonal();
        Eigen::MatrixXd P(starts.size(), U.rows());
        for (std::size_t s = 0; s < starts.size(); ++s) {
            int i = starts[s];
            Eigen::VectorXd row = Ud * U.row(i).transpose();
            for (int j = 0; j < U.rows(); ++j)
                P(s, j) = row(j) * sqrt_mu(j) / sqrt_mu(i);
        }
        return P;
    }
};

SpectralDecomp decompose(const SparseGenerator& gen) {
    SparseMatrixCSR S = gen.symmetrized();
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(S.rows, S.cols);
    for (int r = 0; r < S.rows; ++r)
        for (int k = S.rowptr[r]; k < S.rowptr[r + 1]; ++k) dense(r, S.col[k]) += S.val[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    SpectralDecomp d;
    d.theta = es.eigenvalues();
    d.U = es.eigenvectors();
    d.sqrt_mu.resize(gen.dim());
    for (int i = 0; i < gen.dim(); ++i) d.sqrt_mu(i) = std::sqrt(gen.mu.w[i]);
    d.mu = &gen.mu;
    return d;
}

double worst_tv(const SpectralDecomp& d, double t, const std::vector<int>& starts) {
    Eigen::MatrixXd P = d.rows(t, starts);
    double worst = 0.0;
    for (int s = 0; s < P.rows(); ++s) {
        double acc = 0.0;
        for (int j = 0; j < P.cols(); ++j) acc += std::fabs(P(s, j) - d.mu->w[j]);
        worst = std::max(worst, 0.5 * acc);
    }
    return worst;
}

double worst_l2(const SpectralDecomp& d, double t, const std::vector<int>& starts) {
    Eigen::MatrixXd P = d.rows(t, starts);
    double worst = 0.0;
    for (int s = 0; s < P.rows(); ++s) {
        double acc = 0.0;
        for (int j = 0; j < P.cols(); ++j) {
            double h = P(s, j) / d.mu->w[j] - 1.0;
            acc += h * h * d.mu->w[j];
        }
        worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
}

// First time the nonincreasing curve drops to the threshold.
template <typename Curve>
double threshold_crossing(Curve&& value, double threshold, double rel_tol) {
    if (value(0.0) <= threshold) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (value(hi) > threshold) {
        hi *= 2.0;
        if (++guard > 200) throw std::runtime_error("mixing_times: no crossing found");
    }
    double lo = hi > 1.0 ? hi / 2.0 : 0.0;
    for (int it = 0; it < 200 && (hi - lo) > rel_tol * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (value(mid) > threshold ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace

MixingTimes mixing_times(const SparseGenerator& gen, double rel_tol) {
    if (gen.dim() > 10000)
        throw std::invalid_argument("mixing_times: state space above the exact cap");
    SpectralDecomp d = decompose(gen);
    std::vector<int> starts(gen.dim());
    for (int i = 0; i < gen.dim(); ++i) starts[i] = i;
    const double inv2e = 1.0 / (2.0 * std::exp(1.0));
    const double inve = 1.0 / std::exp(1.0);
    MixingTimes out;
    out.t_mix = threshold_crossing([&](double t) { return worst_tv(d, t, starts); },
                                   inv2e, rel_tol);
    out.t2 = threshold_crossing([&](double t) { return worst_l2(d, t, starts); },
                                inve, rel_tol);
    return out;
}

double tv_from_worst_start(const SparseGenerator& gen, double t,
                           const std::vector<int>& starts) {
    std::vector<int> use = starts;
    if (use.empty()) {
        use.resize(gen.dim());
        for (int i = 0; i < gen.dim(); ++i) use[i] = i;
    }
    // Vector evolution per start keeps memory linear for large spaces.
    double worst = 0.0;
    for (int i : use) {
        std::vector<double> delta(gen.dim(), 0.0);
        delta[i] = 1.0;
        std::vector<double> row = semigroup(gen, t, delta);
        double acc = 0.0;
        for (int j = 0; j < gen.dim(); ++j) acc += std::fabs(row[j] - gen.mu.w[j]);
        worst = std::max(worst, 0.5 * acc);
    }
    return worst;
}

namespace {

struct RatioProblem {
    const QuadraticForm* Q;
    const Measure* mu;

    double dirichlet(const std::vector<double>& f) const { return (*Q)(f); }
    double ratio(const std::vector<double>& f) const {
        double ent = entropy_f2(*mu, f);
        if (ent <= 1e-300) return std::numeric_limits<double>::infinity();
        return dirichlet(f) / ent;
    }
    // gradient of D(f)/Ent(f^2)
    void gradient(const std::vector<double>& f, std::vector<double>& g) const {
        int n = static_cast<int>(f.size());
        std::vector<double> qf(n);
        Q->Q.multiply(f.data(), qf.data());
        double dval = 0.0;
        for (int i = 0; i < n; ++i) dval += f[i] * qf[i];
        KahanSum m2s;
        for (int i = 0; i < n; ++i) m2s.add(mu->w[i] * f[i] * f[i]);
        double m2 = m2s.value();
        double ent = entropy_f2(*mu, f);
        double logm2 = std::log(m2);
        g.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double ge = f[i] == 0.0 ? 0.0
                                    : 2.0 * mu->w[i] * f[i] * (std::log(f[i] * f[i]) - logm2);
            g[i] = (2.0 * qf[i] * ent - dval * ge) / (ent * ent);
        }
    }
};

double descend(const RatioProblem& prob, std::vector<double> f, int max_iter = 400) {
    int n = static_cast<int>(f.size());
    // scale to mu(f^2) = 1 for conditioning
    auto renorm = [&](std::vector<double>& v) {
        double m2 = 0.0;
        for (int i = 0; i < n; ++i) m2 += prob.mu->w[i] * v[i] * v[i];
        if (m2 <= 0.0) return false;
        double s = 1.0 / std::sqrt(m2);
        for (auto& x : v) x *= s;
        return true;
    };
    if (!renorm(f)) return std::numeric_limits<double>::infinity();
    double cur = prob.ratio(f);
    if (!std::isfinite(cur)) return cur;
    std::vector<double> g(n), trial(n);
    double step = 0.1;
    for (int it = 0; it < max_iter; ++it) {
        prob.gradient(f, g);
        double gn = 0.0;
        for (double x : g) gn += x * x;
        gn = std::sqrt(gn);
        if (gn < 1e-14 * std::max(1.0, std::fabs(cur))) break;
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (int i = 0; i < n; ++i) trial[i] = f[i] - step * g[i] / gn;
            if (renorm(trial)) {
                double val = prob.ratio(trial);
                if (val < cur - 1e-15 * std::fabs(cur)) {
                    f = trial;
                    cur = val;
                    improved = true;
                    step *= 1.6;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    // projecting onto |f| never increases the Dirichlet form
    std::vector<double> af(n);
    for (int i = 0; i < n; ++i) af[i] = std::fabs(f[i]);
    double aval = prob.ratio(af);
    return std::min(cur, aval);
}

}  // namespace

LogSobResult logsob_constant(const SparseGenerator& gen, int restarts, std::uint64_t seed) {
    if (gen.dim() > 50000)
        throw std::invalid_argument("logsob_constant: state space above the cap");
    LogSobResult out{};
    out.mu_star = gen.mu.min_weight();
    QuadraticForm form = generator_form(gen);
    RatioProblem prob{&form, &gen.mu};

    double gap, t_rel;
    std::vector<double> gap_vec;
    {
        SpectralDecomp d = decompose(gen);
        gap = d.theta(1);
        t_rel = 1.0 / gap;
        gap_vec.resize(gen.dim());
        // eigenvector of -L: f = D^{-1/2} u
        for (int i = 0; i < gen.dim(); ++i) gap_vec[i] = d.U(i, 1) / d.sqrt_mu(i);
    }
    out.t_rel = t_rel;
    out.bracket_lo = 1.0 / ((2.0 + std::log(1.0 / out.mu_star)) * t_rel);
    out.bracket_hi = 1.0 / (2.0 * t_rel);

    // The perturbative family 1 + eps*g along the gap eigenvector attains
    // D/Ent -> gap/2 as eps -> 0, so gap/2 is always a valid witness value.
    double best = out.bracket_hi;
    out.stagnated = true;

    Rng rng(derive_seed(seed, 0x1059bull));
    auto consider = [&](std::vector<double> f) {
        double val = descend(prob, std::move(f));
        if (val < best) {
            best = val;
            out.stagnated = false;
        }
    };

    for (double eps : {1e-3, 1e-2, 0.1, 1.0}) {
        std::vector<double> f(gen.dim());
        for (int i = 0; i < gen.dim(); ++i) f[i] = 1.0 + eps * gap_vec[i];
        consider(std::move(f));
    }
    {
        // indicator of a single particle, a natural sparse-regime witness
        std::vector<double> f(gen.dim(), 0.0);
        bool any = false;
        for (int i = 0; i < gen.dim(); ++i)
            if (gen.space.radix == 2 && particle_count(gen.space.state(i)) == 1) {
                f[i] = 1.0;
                any = true;
            }
        if (any) consider(std::move(f));
    }
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> f(gen.dim());
        for (auto& x : f) x = rng.normal();
        consider(std::move(f));
    }
    out.witness = best;
    return out;
}

EntropySplit entropy_decomposition(const StateSpace& space, const Measure& mu,
                                   const std::vector<double>& f) {
    if (space.radix != 2)
        throw std::invalid_argument("entropy_decomposition: two-state spaces only");
    int n = space.n;
    std::vector<double> gamma(n + 1, 0.0);
    std::vector<KahanSum> m2(n + 1), entk(n + 1);
    for (int i = 0; i < space.dim(); ++i) {
        int k = particle_count(space.state(i));
        gamma[k] += mu.w[i];
        m2[k].add(mu.w[i] * f[i] * f[i]);
        entk[k].add(mu.w[i] * xlogx(f[i] * f[i]));
    }
    // With m_k = mu(f^2 | N=k):
    //   conditional = sum_k [ mu(f^2 log f^2; N=k) - mu(f^2; N=k) log m_k ]
    //   projected   = sum_k mu(f^2; N=k) log m_k - mu(f^2) log mu(f^2)
    KahanSum cond, proj;
    double total_m2 = 0.0;
    for (int k = 0; k <= n; ++k) total_m2 += m2[k].value();
    for (int k = 0; k <= n; ++k) {
        if (gamma[k] <= 0.0 || m2[k].value() <= 0.0) continue;
        double log_mk = std::log(m2[k].value() / gamma[k]);
        cond.add(entk[k].value() - m2[k].value() * log_mk);
        proj.add(m2[k].value() * log_mk);
    }
    EntropySplit out{};
    out.conditional_term = cond.value();
    out.projected_term =
        proj.value() - (total_m2 > 0.0 ? total_m2 * std::log(total_m2) : 0.0);
    return out;
}

double form_ratio_max(const QuadraticForm& A, const QuadraticForm& B) {
    int n = A.dim();
    if (B.dim() != n) throw std::invalid_argument("form_ratio_max: dimension mismatch");
    if (n > 4096) throw std::invalid_argument("form_ratio_max: dense cap exceeded");
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(n, n), Bd = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        for (int k = A.Q.rowptr[r]; k < A.Q.rowptr[r + 1]; ++k) Ad(r, A.Q.col[k]) += A.Q.val[k];
        for (int k = B.Q.rowptr[r]; k < B.Q.rowptr[r + 1]; ++k) Bd(r, B.Q.col[k]) += B.Q.val[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esB(Bd);
    double bmax = esB.eigenvalues().cwiseAbs().maxCoeff();
    double amax = std::max(1e-300, Ad.cwiseAbs().maxCoeff());
    double kertol = 1e-12 * std::max(bmax, 1e-300);
    std::vector<int> pos;
    for (int i = 0; i < n; ++i) {
        if (esB.eigenvalues()(i) > kertol) {
            pos.push_back(i);
        } else {
            // kernel direction of B must also annihilate A
            Eigen::VectorXd v = esB.eigenvectors().col(i);
            double a = v.dot(Ad * v);
            if (std::fabs(a) > 1e-9 * amax)
                throw std::invalid_argument("form_ratio_max: ker(B) not within ker(A)");
        }
    }
    if (pos.empty()) throw std::invalid_argument("form_ratio_max: B vanishes");
    Eigen::MatrixXd W(n, pos.size());
    for (std::size_t j = 0; j < pos.size(); ++j)
        W.col(j) = esB.eigenvectors().col(pos[j]) / std::sqrt(esB.eigenvalues()(pos[j]));
    Eigen::MatrixXd M = W.transpose() * Ad * W;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(M);
    return esM.eigenvalues().maxCoeff();
}

RestrictedGapHitting restricted_gap_and_hitting(const Graph& g, double p) {
    if (g.vertex_count() > 20)
        throw std::invalid_argument("restricted_gap_and_hitting: n above cap");
    SparseGenerator gen = cbsep_generator(g, p);
    std::vector<int> sub;  // indices with N >= 2
    std::vector<int> map(gen.dim(), -1);
    for (int i = 0; i < gen.dim(); ++i)
        if (particle_count(gen.space.state(i)) >= 2) {
            map[i] = static_cast<int>(sub.size());
            sub.push_back(i);
        }
    if (sub.empty()) throw std::invalid_argument("restricted_gap_and_hitting: need n >= 2");
    int d = static_cast<int>(sub.size());
    // Dirichlet restriction of -L (equivalently of S, same spectrum).
    SparseMatrixCSR S = gen.symmetrized();
    SparseMatrixCSR Ssub;
    Ssub.cols = d;
    std::vector<std::pair<int, double>> row;
    for (int i : sub) {
        row.clear();
        for (int k = S.rowptr[i]; k < S.rowptr[i + 1]; ++k)
            if (map[S.col[k]] >= 0) row.emplace_back(map[S.col[k]], S.val[k]);
        Ssub.append_row(row);
    }
    RestrictedGapHitting out{};
    out.lambda0 = smallest_eigenvalue(Ssub);
    // E_tau: solve (-L_sub) u = 1 via the symmetrized positive definite
    // system S_sub y = D^{1/2} 1, u = D^{-1/2} y.
    std::vector<double> rhs(d), y(d);
    for (int r = 0; r < d; ++r) rhs[r] = std::sqrt(gen.mu.w[sub[r]]);
    if (d <= 4096) {
        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(d, d);
        for (int r = 0; r < d; ++r)
            for (int k = Ssub.rowptr[r]; k < Ssub.rowptr[r + 1]; ++k)
                dense(r, Ssub.col[k]) += Ssub.val[k];
        Eigen::Map<Eigen::VectorXd> b(rhs.data(), d);
        Eigen::VectorXd sol = dense.ldlt().solve(b);
        for (int r = 0; r < d; ++r) y[r] = sol(r);
    } else {
        // conjugate gradient with Jacobi preconditioner
        std::vector<double> diag(d, 1.0);
        for (int r = 0; r < d; ++r) {
            double dv = Ssub.entry(r, r);
            if (dv > 0.0) diag[r] = 1.0 / dv;
        }
        std::vector<double> x(d, 0.0), res = rhs, z(d), pvec(d), ap(d);
        for (int r = 0; r < d; ++r) z[r] = diag[r] * res[r];
        pvec = z;
        double rz = 0.0, rhs_norm = 0.0;
        for (int r = 0; r < d; ++r) {
            rz += res[r] * z[r];
            rhs_norm += rhs[r] * rhs[r];
        }
        rhs_norm = std::sqrt(rhs_norm);
        for (long long it = 0; it < 20LL * d; ++it) {
            Ssub.multiply(pvec.data(), ap.data());
            double pap = 0.0;
            for (int r = 0; r < d; ++r) pap += pvec[r] * ap[r];
            double alpha = rz / pap;
            double rn = 0.0;
            for (int r = 0; r < d; ++r) {
                x[r] += alpha * pvec[r];
                res[r] -= alpha * ap[r];
                rn += res[r] * res[r];
            }
            if (std::sqrt(rn) < 1e-12 * rhs_norm) break;
            double rz_new = 0.0;
            for (int r = 0; r < d; ++r) {
                z[r] = diag[r] * res[r];
                rz_new += res[r] * z[r];
            }
            double beta = rz_new / rz;
            rz = rz_new;
            for (int r = 0; r < d; ++r) pvec[r] = z[r] + beta * pvec[r];
        }
        y = x;
    }
    // u_i = y_i / sqrt(mu_i); average over mu(.|N>=2)
    double mass = 0.0, acc = 0.0;
    for (int r = 0; r < d; ++r) {
        mass += gen.mu.w[sub[r]];
        acc += gen.mu.w[sub[r]] * (y[r] / std::sqrt(gen.mu.w[sub[r]]));
    }
    out.expected_hitting = acc / mass;
    return out;
}

}  // namespace cbsep
