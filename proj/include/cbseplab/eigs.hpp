#pragma once

#include <functional>
#include <vector>

#include "cbseplab/generator.hpp"

namespace cbsep {

struct LanczosOptions {
    int max_basis = 80;
    int keep = 20;
    long long max_matvecs = 400000;
    double tol = 1e-11;  // residual tolerance relative to the operator scale
    std::uint64_t seed = 12345;
};

/// Largest eigenvalue of a symmetric operator restricted to the orthogonal
/// complement of the given (orthonormal) deflation vectors. Thick-restart
/// Lanczos with full reorthogonalization. Throws on non-convergence with the
/// residual in the message.
double lanczos_largest(const std::function<void(const double*, double*)>& op, int dim,
                       const std::vector<std::vector<double>>& deflate,
                       double scale,  // magnitude used for the tolerance
                       const LanczosOptions& opts = {});

/// Gershgorin upper bound on the spectrum of a symmetric CSR matrix.
double gershgorin_upper(const SparseMatrixCSR& s);

/// Second-smallest eigenvalue of the mu-symmetrized negative generator,
/// i.e. the spectral gap above the known kernel sqrt(mu). Uses a dense
/// solver up to `dense_cap`, thick-restart Lanczos beyond.
double spectral_gap(const SparseGenerator& gen, int dense_cap = 2048,
                    const LanczosOptions& opts = {});

inline double relaxation_time(const SparseGenerator& gen, int dense_cap = 2048,
                              const LanczosOptions& opts = {}) {
    return 1.0 / spectral_gap(gen, dense_cap, opts);
}

/// Smallest eigenvalue of a symmetric PSD CSR matrix (no deflation).
double smallest_eigenvalue(const SparseMatrixCSR& s, int dense_cap = 2048,
                           const LanczosOptions& opts = {});

}  // namespace cbsep
