#include "cbseplab/eigs.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "cbseplab/rng.hpp"

namespace cbsep {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void project_out(const std::vector<std::vector<double>>& basis, std::vector<double>& w) {
    for (const auto& v : basis) axpy(-dot(v, w), v, w);
}

Eigen::MatrixXd to_dense(const SparseMatrixCSR& s) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(s.rows, s.cols);
    for (int r = 0; r < s.rows; ++r)
        for (int k = s.rowptr[r]; k < s.rowptr[r + 1]; ++k) d(r, s.col[k]) += s.val[k];
    return d;
}

}  // namespace

double gershgorin_upper(const SparseMatrixCSR& s) {
    double bound = 0.0;
    for (int r = 0; r < s.rows; ++r) {
        double diag = 0.0, off = 0.0;
        for (int k = s.rowptr[r]; k < s.rowptr[r + 1]; ++k) {
            if (s.col[k] == r)
                diag += s.val[k];
            else
                off += std::fabs(s.val[k]);
        }
        bound = std::max(bound, diag + off);
    }
    return bound;
}

double lanczos_largest(const std::function<void(const double*, double*)>& op, int dim,
                       const std::vector<std::vector<double>>& deflate, double scale,
                       const LanczosOptions& opts) {
    if (dim < 1) throw std::invalid_argument("lanczos: empty operator");
    const int m = std::min(opts.max_basis, dim);
    Rng rng(derive_seed(opts.seed, 0x1a2cull));

    std::vector<std::vector<double>> V;
    V.reserve(m + 1);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> w(dim);

    // Random vector orthonormal to the deflation set and to V[0..upto).
    auto random_orthonormal = [&](int upto) -> std::optional<std::vector<double>> {
        for (int attempt = 0; attempt < 5; ++attempt) {
            std::vector<double> v(dim);
            for (auto& x : v) x = rng.normal();
            project_out(deflate, v);
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i < upto; ++i) axpy(-dot(V[i], v), V[i], v);
            double nn = norm(v);
            if (nn > 1e-6) {
                for (auto& x : v) x /= nn;
                return v;
            }
        }
        return std::nullopt;
    };

    auto first = random_orthonormal(0);
    if (!first) throw std::runtime_error("lanczos: deflation space fills the domain");
    V.push_back(std::move(*first));

    int k = 0;                  // size of the kept Ritz block after a restart
    std::vector<double> arrow;  // couplings of the kept block to V[k]
    long long matvecs = 0;
    double last_residual = std::numeric_limits<double>::infinity();

    while (true) {
        bool exhausted = false;
        double beta = 0.0;
        int j = k;
        for (; j < m; ++j) {
            op(V[j].data(), w.data());
            ++matvecs;
            double alpha = dot(V[j], w);
            T(j, j) = alpha;
            axpy(-alpha, V[j], w);
            if (j == k) {
                for (int i = 0; i < k; ++i) axpy(-arrow[i], V[i], w);
            } else {
                axpy(-T(j, j - 1), V[j - 1], w);
            }
            project_out(deflate, w);
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) axpy(-dot(V[i], w), V[i], w);
            beta = norm(w);
            if (beta < 1e-13 * std::max(scale, 1.0)) {
                beta = 0.0;
                auto nv = random_orthonormal(j + 1);
                if (!nv) {
                    exhausted = true;
                    ++j;
                    break;
                }
                if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = 0.0;
                V.push_back(std::move(*nv));
            } else {
                std::vector<double> v = w;
                for (auto& x : v) x /= beta;
                if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta;
                V.push_back(std::move(v));
            }
        }
        const int built = j;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(built, built));
        const Eigen::VectorXd& theta = es.eigenvalues();  // ascending
        const Eigen::MatrixXd& S = es.eigenvectors();
        const int top = built - 1;
        const double beta_last = exhausted ? 0.0 : beta;
        last_residual = std::fabs(beta_last * S(built - 1, top));
        if (exhausted || built >= dim || last_residual <= opts.tol * std::max(scale, 1e-300))
            return theta(top);
        if (matvecs >= opts.max_matvecs)
            throw std::runtime_error("lanczos: no convergence, residual " +
                                     std::to_string(last_residual) + " after " +
                                     std::to_string(matvecs) + " matvecs");
        // Thick restart with the largest Ritz pairs.
        int kk = std::min(opts.keep, built - 2 > 0 ? built - 2 : 1);
        std::vector<std::vector<double>> newV(kk, std::vector<double>(dim, 0.0));
        std::vector<double> new_arrow(kk);
        for (int i = 0; i < kk; ++i) {
            int idx = built - 1 - i;
            for (int l = 0; l < built; ++l) axpy(S(l, idx), V[l], newV[i]);
            new_arrow[i] = beta_last * S(built - 1, idx);
        }
        std::vector<double> cont = std::move(V[built]);
        V.assign(std::make_move_iterator(newV.begin()), std::make_move_iterator(newV.end()));
        V.push_back(std::move(cont));
        T.setZero();
        for (int i = 0; i < kk; ++i) {
            T(i, i) = theta(built - 1 - i);
            T(i, kk) = T(kk, i) = new_arrow[i];
        }
        arrow = std::move(new_arrow);
        k = kk;
    }
}

double spectral_gap(const SparseGenerator& gen, int dense_cap, const LanczosOptions& opts) {
    SparseMatrixCSR S = gen.symmetrized();
    if (gen.dim() <= dense_cap) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(S));
        double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (es.eigenvalues()(0) < -1e-8 * top)
            throw std::runtime_error("spectral_gap: -L not positive semidefinite");
        return es.eigenvalues()(1);
    }
    double lambda_top = gershgorin_upper(S) * (1.0 + 1e-12) + 1e-300;
    std::vector<double> kernel(gen.dim());
    for (int i = 0; i < gen.dim(); ++i) kernel[i] = std::sqrt(gen.mu.w[i]);
    double nn = norm(kernel);
    for (double& v : kernel) v /= nn;
    auto op = [&](const double* x, double* y) {
        S.multiply(x, y);
        for (int i = 0; i < S.rows; ++i) y[i] = lambda_top * x[i] - y[i];
    };
    double theta = lanczos_largest(op, gen.dim(), {kernel}, lambda_top, opts);
    return lambda_top - theta;
}

double smallest_eigenvalue(const SparseMatrixCSR& s, int dense_cap, const LanczosOptions& opts) {
    if (s.rows <= dense_cap) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense(s));
        return es.eigenvalues()(0);
    }
    double lambda_top = gershgorin_upper(s) * (1.0 + 1e-12) + 1e-300;
    auto op = [&](const double* x, double* y) {
        s.multiply(x, y);
        for (int i = 0; i < s.rows; ++i) y[i] = lambda_top * x[i] - y[i];
    };
    double theta = lanczos_largest(op, s.rows, {}, lambda_top, opts);
    return lambda_top - theta;
}

}  // namespace cbsep
