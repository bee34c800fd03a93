#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbseplab/graph.hpp"
#include "cbseplab/statespace.hpp"

namespace cbsep {

/// Minimal CSR matrix; rows are built in order and columns kept sorted.
struct SparseMatrixCSR {
    int rows = 0;
    int cols = 0;
    std::vector<int> rowptr{0};
    std::vector<int> col;
    std::vector<double> val;

    void append_row(std::vector<std::pair<int, double>>& entries);
    void multiply(const double* x, double* y) const;
    std::vector<double> multiply(const std::vector<double>& x) const;
    double quad(std::span<const double> f) const;  // f' * M * f
    std::size_t nonzeros() const { return val.size(); }
    double entry(int r, int c) const;
};

/// Rate matrix of a continuous-time chain together with its reversible
/// measure. Off-diagonal entries are jump rates, diagonal entries the
/// negative exit rates.
struct SparseGenerator {
    StateSpace space;
    Measure mu;
    SparseMatrixCSR rates;

    int dim() const { return rates.rows; }
    double max_exit_rate() const;
    double row_sum_residual() const;
    double detailed_balance_residual() const;
    // S = D^{1/2} (-L) D^{-1/2}, symmetric positive semidefinite.
    SparseMatrixCSR symmetrized() const;
};

SparseGenerator cbsep_generator(const Graph& g, double p);
SparseGenerator fa1f_generator(const Graph& g, double p);

/// Finite single-vertex alphabet with a particle/hole bipartition and a
/// product measure rho.
struct StateAlphabet {
    std::vector<double> rho;          // weights, normalized on construction
    std::vector<char> is_particle;    // bipartition indicator per letter

    int size() const { return static_cast<int>(rho.size()); }
    double particle_mass() const;     // rho(S1)
    void validate() const;
};

SparseGenerator gcbsep_generator(const Graph& g, const StateAlphabet& alphabet);

// Occupancy projection code of a general configuration.
std::uint32_t project_code(const StateSpace& gspace, const StateAlphabet& alphabet,
                           std::uint32_t gcode);

// Max abs difference between the lumped g-CBSEP rates and the CBSEP rates:
// for every general state w and target occupancy class h', compares
// sum_{w' in class h'} c(w,w') with the CBSEP rate c(phi(w), h').
double lumping_residual(const SparseGenerator& ggen, const StateAlphabet& alphabet,
                        const SparseGenerator& cgen);

/// Symmetric positive-semidefinite quadratic form over an enumerated space.
struct QuadraticForm {
    SparseMatrixCSR Q;

    int dim() const { return Q.rows; }
    double operator()(std::span<const double> f) const { return Q.quad(f); }
};

enum class FormKind { cbsep, fa1f, sep_graph, bl_complete, single_flip };

// All forms live on the omega_plus space of g with measure mu = pi(.|omega_plus).
QuadraticForm dirichlet_form(FormKind kind, const Graph& g, double p);
QuadraticForm generator_form(const SparseGenerator& gen);

}  // namespace cbsep
