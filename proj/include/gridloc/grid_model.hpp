#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridloc/case_io.hpp"

namespace gridloc {

struct Line {
    int from = 0; // internal bus index
    int to = 0;
    double x = 0.0;
};

// The connectivity graph G(B, E). Bus indices are internal (0-based, dense);
// line order is fixed and defines the column order of the incidence matrix.
struct GridTopology {
    int n_buses = 0;
    std::vector<Line> lines;
    int reference = 0;
    std::vector<int> bus_ids;                               // internal -> external
    std::vector<std::vector<int>> neighbors;                // sorted, full graph
    std::vector<std::vector<std::pair<int, int>>> incident; // bus -> (line, other bus)

    int n_lines() const { return static_cast<int>(lines.size()); }
    int internal_index(int external_id) const; // throws ValidationError if unknown

    // Number of non-reference neighbors: the degree of a bus within the
    // reduced (full-rank) system, which is what makes a measurement point
    // informative. The reference bus itself keeps its full neighbor count.
    int informative_degree(int bus) const;

    // Line index of the branch between two internal bus indices, -1 if none.
    int line_between(int a, int b) const;
};

// Builds the graph from in-service branches. Reference = slack bus when the
// case has one, otherwise the bus of maximum degree (ties -> lowest id).
// Throws ValidationError listing components if the graph is disconnected.
GridTopology build_topology(const RawCase& c);

// Full N x N weighted Laplacian per the DC model.
Eigen::MatrixXd full_laplacian(const GridTopology& topo);

// Laplacian with the reference row/column removed; full rank by construction.
Eigen::MatrixXd reduced_laplacian(const GridTopology& topo);

// SPD inverse via Cholesky. Verifies ||H*B - I||_max <= 1e-9 and throws
// NumericalError on factorization failure or residual violation.
Eigen::MatrixXd invert_laplacian(const Eigen::MatrixXd& h_reduced);

struct GmrfCoefficients {
    Eigen::VectorXd beta;                                  // per bus
    std::vector<std::vector<std::pair<int, double>>> rows; // bus -> (neighbor, r_ij)

    double r(int i, int j) const {
        for (const auto& [nb, v] : rows[i])
            if (nb == j) return v;
        return 0.0;
    }
};

// beta_i = (sum_j 1/x_ij)^-1 over the full neighborhood, r_ij = beta_i / x_ij.
// Row sums are 1 up to rounding.
GmrfCoefficients gmrf_coefficients(const GridTopology& topo);

// M: N x L with +1 at the from bus and -1 at the to bus of each line;
// x_diag[i] = 1/x_i. M * diag(x_diag) * M^T equals the full Laplacian.
void incidence_and_reactance(const GridTopology& topo, Eigen::MatrixXd& m_inc,
                             Eigen::VectorXd& x_diag);

// Immutable after construction; shareable across trial workers.
struct GmrfModel {
    GridTopology topo;
    Eigen::MatrixXd h_reduced;  // (N-1) x (N-1)
    Eigen::MatrixXd b_reduced;  // its inverse
    GmrfCoefficients coeffs;
    Eigen::MatrixXd m_inc;      // N x L
    Eigen::VectorXd x_diag;     // L, entries 1/x
    Eigen::MatrixXd m_reduced;  // (N-1) x L
    Eigen::VectorXd injections; // full N, per-unit
    Eigen::VectorXd p_reduced;  // N-1
    Eigen::VectorXd theta_bar;  // full N, reference entry 0
    std::vector<int> reduced_of; // bus -> reduced row, -1 for reference
    std::vector<int> bus_of;     // reduced row -> bus

    int n_buses() const { return topo.n_buses; }
    int n_lines() const { return topo.n_lines(); }
};

GmrfModel build_model(const RawCase& c);
GmrfModel load_model(const std::string& case_path);

} // namespace gridloc
