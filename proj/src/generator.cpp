#include "cbseplab/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cbseplab/numeric.hpp"

namespace cbsep {

void SparseMatrixCSR::append_row(std::vector<std::pair<int, double>>& entries) {
    std::sort(entries.begin(), entries.end());
    // merge duplicate columns
    int w = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (w > 0 && entries[w - 1].first == entries[i].first) {
            entries[w - 1].second += entries[i].second;
        } else {
            entries[w] = entries[i];
            ++w;
        }
    }
    entries.resize(w);
    for (auto& [c, v] : entries) {
        col.push_back(c);
        val.push_back(v);
        cols = std::max(cols, c + 1);
    }
    rowptr.push_back(static_cast<int>(col.size()));
    ++rows;
}

void SparseMatrixCSR::multiply(const double* x, double* y) const {
    for (int r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) s += val[k] * x[col[k]];
        y[r] = s;
    }
}

std::vector<double> SparseMatrixCSR::multiply(const std::vector<double>& x) const {
    std::vector<double> y(rows);
    multiply(x.data(), y.data());
    return y;
}

double SparseMatrixCSR::quad(std::span<const double> f) const {
    KahanSum s;
    for (int r = 0; r < rows; ++r) {
        double row = 0.0;
        for (int k = rowptr[r]; k < rowptr[r + 1]; ++k) row += val[k] * f[col[k]];
        s.add(f[r] * row);
    }
    return s.value();
}

double SparseMatrixCSR::entry(int r, int c) const {
    for (int k = rowptr[r]; k < rowptr[r + 1]; ++k)
        if (col[k] == c) return val[k];
    return 0.0;
}

double SparseGenerator::max_exit_rate() const {
    double m = 0.0;
    for (int r = 0; r < rates.rows; ++r) m = std::max(m, -rates.entry(r, r));
    return m;
}

double SparseGenerator::row_sum_residual() const {
    double worst = 0.0;
    for (int r = 0; r < rates.rows; ++r) {
        KahanSum s;
        for (int k = rates.rowptr[r]; k < rates.rowptr[r + 1]; ++k) s.add(rates.val[k]);
        worst = std::max(worst, std::fabs(s.value()));
    }
    return worst;
}

double SparseGenerator::detailed_balance_residual() const {
    double worst = 0.0;
    for (int r = 0; r < rates.rows; ++r)
        for (int k = rates.rowptr[r]; k < rates.rowptr[r + 1]; ++k) {
            int c = rates.col[k];
            if (c <= r) continue;
            double forward = mu.w[r] * rates.val[k];
            double backward = mu.w[c] * rates.entry(c, r);
            worst = std::max(worst, std::fabs(forward - backward));
        }
    return worst;
}

SparseMatrixCSR SparseGenerator::symmetrized() const {
    // S_ij = -c(i,j) sqrt(mu_i / mu_j) = -sqrt(c(i,j) c(j,i)) by detailed
    // balance; S_ii = exit rate.
    SparseMatrixCSR s;
    s.cols = rates.cols;
    std::vector<std::pair<int, double>> row;
    for (int r = 0; r < rates.rows; ++r) {
        row.clear();
        for (int k = rates.rowptr[r]; k < rates.rowptr[r + 1]; ++k) {
            int c = rates.col[k];
            double v = rates.val[k];
            if (c == r)
                row.emplace_back(c, -v);
            else
                row.emplace_back(c, -v * std::sqrt(mu.w[r] / mu.w[c]));
        }
        s.append_row(row);
    }
    return s;
}

namespace {

struct GeneratorBuilder {
    SparseMatrixCSR m;
    std::vector<std::pair<int, double>> row;

    void start_row() { row.clear(); }
    void add(int target, double rate) { row.emplace_back(target, rate); }
    void finish_row(int self) {
        double exit = 0.0;
        for (auto& [c, v] : row) exit += v;
        row.emplace_back(self, -exit);
        m.append_row(row);
    }
};

}  // namespace

SparseGenerator cbsep_generator(const Graph& g, double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("cbsep_generator: need 0 < p < 1");
    SparseGenerator gen;
    gen.space = enumerate_states(g.vertex_count(), StateConstraint::omega_plus);
    gen.mu = conditioned_bernoulli(gen.space, p);
    const double move = (1.0 - p) / (2.0 - p);
    const double branch = p / (2.0 - p);
    GeneratorBuilder b;
    for (int i = 0; i < gen.space.dim(); ++i) {
        std::uint32_t w = gen.space.state(i);
        b.start_row();
        for (const auto& e : g.edges()) {
            std::uint32_t bu = (w >> e.u) & 1u, bv = (w >> e.v) & 1u;
            if (bu + bv == 0) continue;  // empty edge: no resampling
            std::uint32_t both = w | (1u << e.u) | (1u << e.v);
            std::uint32_t only_u = both & ~(1u << e.v);
            std::uint32_t only_v = both & ~(1u << e.u);
            if (bu + bv == 1) {
                // SEP move to the opposite endpoint, or branch to (1,1).
                std::uint32_t swapped = bu ? only_v : only_u;
                b.add(gen.space.index(swapped), move);
                b.add(gen.space.index(both), branch);
            } else {
                // Coalesce: kill one of the two particles, chosen uniformly.
                b.add(gen.space.index(only_u), move);
                b.add(gen.space.index(only_v), move);
            }
        }
        b.finish_row(i);
    }
    gen.rates = std::move(b.m);
    gen.rates.cols = gen.space.dim();
    return gen;
}

SparseGenerator fa1f_generator(const Graph& g, double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("fa1f_generator: need 0 < p < 1");
    SparseGenerator gen;
    gen.space = enumerate_states(g.vertex_count(), StateConstraint::omega_plus);
    gen.mu = conditioned_bernoulli(gen.space, p);
    GeneratorBuilder b;
    for (int i = 0; i < gen.space.dim(); ++i) {
        std::uint32_t w = gen.space.state(i);
        b.start_row();
        for (int x = 0; x < g.vertex_count(); ++x) {
            bool facilitated = false;
            for (int y : g.neighbors(x))
                if ((w >> y) & 1u) {
                    facilitated = true;
                    break;
                }
            if (!facilitated) continue;
            std::uint32_t flipped = w ^ (1u << x);
            // Resampling at rate one w.r.t. pi_x: the state actually changes
            // with probability p (fill) or 1-p (empty). A facilitated vertex
            // always has an occupied neighbour, so flipping never leaves
            // omega_plus.
            double rate = ((w >> x) & 1u) ? (1.0 - p) : p;
            b.add(gen.space.index(flipped), rate);
        }
        b.finish_row(i);
    }
    gen.rates = std::move(b.m);
    gen.rates.cols = gen.space.dim();
    return gen;
}

double StateAlphabet::particle_mass() const {
    double s = 0.0;
    for (int a = 0; a < size(); ++a)
        if (is_particle[a]) s += rho[a];
    return s;
}

void StateAlphabet::validate() const {
    if (rho.size() != is_particle.size() || rho.empty())
        throw std::invalid_argument("alphabet: inconsistent sizes");
    double s = 0.0;
    bool any1 = false, any0 = false;
    for (int a = 0; a < size(); ++a) {
        if (rho[a] <= 0.0) throw std::invalid_argument("alphabet: weights must be positive");
        s += rho[a];
        (is_particle[a] ? any1 : any0) = true;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw std::invalid_argument("alphabet: rho must sum to 1");
    if (!any1 || !any0)
        throw std::invalid_argument("alphabet: both partition classes must be nonempty");
}

namespace {

StateSpace enumerate_general_plus(int n, const StateAlphabet& alphabet) {
    int s = alphabet.size();
    double total_d = std::pow(static_cast<double>(s), n);
    if (total_d > 1e6) throw std::invalid_argument("gcbsep: state space larger than 1e6");
    auto total = static_cast<std::uint64_t>(total_d + 0.5);
    StateSpace sp;
    sp.n = n;
    sp.radix = s;
    sp.lookup.assign(total, -1);
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        bool has_particle = false;
        for (int x = 0; x < n; ++x) {
            if (alphabet.is_particle[c % s]) {
                has_particle = true;
                break;
            }
            c /= s;
        }
        if (has_particle) {
            sp.lookup[code] = static_cast<std::int32_t>(sp.states.size());
            sp.states.push_back(static_cast<std::uint32_t>(code));
        }
    }
    return sp;
}

}  // namespace

SparseGenerator gcbsep_generator(const Graph& g, const StateAlphabet& alphabet) {
    alphabet.validate();
    int n = g.vertex_count();
    int s = alphabet.size();
    SparseGenerator gen;
    gen.space = enumerate_general_plus(n, alphabet);
    gen.mu.w.resize(gen.space.dim());
    for (int i = 0; i < gen.space.dim(); ++i) {
        double w = 1.0;
        std::uint32_t c = gen.space.state(i);
        for (int x = 0; x < n; ++x) {
            w *= alphabet.rho[c % s];
            c /= s;
        }
        gen.mu.w[i] = w;
    }
    gen.mu.normalize();

    double p = alphabet.particle_mass();
    double edge_mass = p * (2.0 - p);  // rho x rho (edge not empty)
    // Powers of s for digit surgery.
    std::vector<std::uint64_t> pw(n + 1, 1);
    for (int x = 0; x < n; ++x) pw[x + 1] = pw[x] * s;

    GeneratorBuilder b;
    for (int i = 0; i < gen.space.dim(); ++i) {
        std::uint32_t w = gen.space.state(i);
        b.start_row();
        for (const auto& e : g.edges()) {
            int au = gen.space.digit(w, e.u), av = gen.space.digit(w, e.v);
            if (!alphabet.is_particle[au] && !alphabet.is_particle[av]) continue;
            std::uint64_t base = w - au * pw[e.u] - av * pw[e.v];
            for (int su = 0; su < s; ++su)
                for (int sv = 0; sv < s; ++sv) {
                    if (!alphabet.is_particle[su] && !alphabet.is_particle[sv]) continue;
                    if (su == au && sv == av) continue;
                    auto target = static_cast<std::uint32_t>(base + su * pw[e.u] + sv * pw[e.v]);
                    b.add(gen.space.index(target),
                          alphabet.rho[su] * alphabet.rho[sv] / edge_mass);
                }
        }
        b.finish_row(i);
    }
    gen.rates = std::move(b.m);
    gen.rates.cols = gen.space.dim();
    return gen;
}

std::uint32_t project_code(const StateSpace& gspace, const StateAlphabet& alphabet,
                           std::uint32_t gcode) {
    std::uint32_t mask = 0;
    std::uint64_t c = gcode;
    for (int x = 0; x < gspace.n; ++x) {
        if (alphabet.is_particle[c % gspace.radix]) mask |= (1u << x);
        c /= gspace.radix;
    }
    return mask;
}

double lumping_residual(const SparseGenerator& ggen, const StateAlphabet& alphabet,
                        const SparseGenerator& cgen) {
    double worst = 0.0;
    for (int i = 0; i < ggen.dim(); ++i) {
        std::uint32_t eta = project_code(ggen.space, alphabet, ggen.space.state(i));
        int ci = cgen.space.index(eta);
        std::map<int, double> lumped;  // CBSEP target index -> total rate
        for (int k = ggen.rates.rowptr[i]; k < ggen.rates.rowptr[i + 1]; ++k) {
            int j = ggen.rates.col[k];
            if (j == i) continue;
            std::uint32_t eta2 = project_code(ggen.space, alphabet, ggen.space.state(j));
            if (eta2 == eta) continue;
            lumped[cgen.space.index(eta2)] += ggen.rates.val[k];
        }
        for (int k = cgen.rates.rowptr[ci]; k < cgen.rates.rowptr[ci + 1]; ++k) {
            int cj = cgen.rates.col[k];
            if (cj == ci) continue;
            double expect = cgen.rates.val[k];
            auto it = lumped.find(cj);
            double got = it == lumped.end() ? 0.0 : it->second;
            worst = std::max(worst, std::fabs(expect - got));
            if (it != lumped.end()) lumped.erase(it);
        }
        for (auto& [cj, v] : lumped) worst = std::max(worst, std::fabs(v));
    }
    return worst;
}

QuadraticForm generator_form(const SparseGenerator& gen) {
    // Q = sym(Dmu * (-L)); averaging with the transpose removes the
    // detailed-balance roundoff.
    int d = gen.dim();
    std::vector<std::vector<std::pair<int, double>>> rows(d);
    for (int r = 0; r < d; ++r)
        for (int k = gen.rates.rowptr[r]; k < gen.rates.rowptr[r + 1]; ++k) {
            int c = gen.rates.col[k];
            double v = -gen.mu.w[r] * gen.rates.val[k];
            rows[r].emplace_back(c, 0.5 * v);
            rows[c].emplace_back(r, 0.5 * v);
        }
    QuadraticForm q;
    q.Q.cols = d;
    for (int r = 0; r < d; ++r) q.Q.append_row(rows[r]);
    return q;
}

namespace {

// Assemble sum_t w_t (f(a_t) - f(b_t))^2 as a sparse symmetric matrix.
struct FormBuilder {
    explicit FormBuilder(int dim) : rows(dim) {}
    void add_pair(int a, int b, double w) {
        rows[a].emplace_back(a, w);
        rows[b].emplace_back(b, w);
        rows[a].emplace_back(b, -w);
        rows[b].emplace_back(a, -w);
    }
    QuadraticForm build() {
        QuadraticForm q;
        q.Q.cols = static_cast<int>(rows.size());
        for (auto& r : rows) q.Q.append_row(r);
        return q;
    }
    std::vector<std::vector<std::pair<int, double>>> rows;
};

}  // namespace

QuadraticForm dirichlet_form(FormKind kind, const Graph& g, double p) {
    if (kind == FormKind::cbsep) return generator_form(cbsep_generator(g, p));
    if (kind == FormKind::fa1f) return generator_form(fa1f_generator(g, p));

    StateSpace space = enumerate_states(g.vertex_count(), StateConstraint::omega_plus);
    Measure mu = conditioned_bernoulli(space, p);
    int n = g.vertex_count();
    FormBuilder fb(space.dim());
    if (kind == FormKind::sep_graph || kind == FormKind::bl_complete) {
        // (1/2) sum_e mu((f(w^e) - f(w))^2), edges of g or of the complete
        // graph, the latter scaled by 1/n. Enumerating both members of each
        // swap pair contributes mu(w) per unordered pair.
        double scale = kind == FormKind::sep_graph ? 0.5 : 0.5 / n;
        auto add_swap = [&](std::uint32_t w, int i, int u, int v) {
            std::uint32_t bu = (w >> u) & 1u, bv = (w >> v) & 1u;
            if (bu == bv) return;
            std::uint32_t swapped = w ^ (1u << u) ^ (1u << v);
            int j = space.index(swapped);
            if (j > i) fb.add_pair(i, j, scale * (mu.w[i] + mu.w[j]));
        };
        for (int i = 0; i < space.dim(); ++i) {
            std::uint32_t w = space.state(i);
            if (kind == FormKind::sep_graph) {
                for (const auto& e : g.edges()) add_swap(w, i, e.u, e.v);
            } else {
                for (int u = 0; u < n; ++u)
                    for (int v = u + 1; v < n; ++v) add_swap(w, i, u, v);
            }
        }
    } else if (kind == FormKind::single_flip) {
        // p sum_y mu([f(w^y) - f(w)]^2 (1 - w_y)); only fills of empty sites.
        for (int i = 0; i < space.dim(); ++i) {
            std::uint32_t w = space.state(i);
            for (int y = 0; y < n; ++y) {
                if ((w >> y) & 1u) continue;
                int j = space.index(w | (1u << y));
                fb.add_pair(i, j, p * mu.w[i]);
            }
        }
    } else {
        throw std::invalid_argument("dirichlet_form: unknown kind");
    }
    return fb.build();
}

}  // namespace cbsep
