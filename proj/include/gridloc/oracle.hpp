#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridloc/decision.hpp"
#include "gridloc/selection.hpp"

namespace gridloc {
namespace oracle {

struct GaussianModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance; // symmetric positive definite
};

// Closed-form KL divergence between multivariate Gaussians.
// Throws NumericalError when a covariance is not positive definite.
double gaussian_kl(const GaussianModel& p, const GaussianModel& q);

// Exhaustive counterpart of the neighbor-restricted selection rule: for every
// unobserved candidate, enumerates all subsets of the unobserved buses that
// contain it and maximizes the chosen metric. Refuses models above 12 buses.
// Tie-break: lowest bus index.
int exhaustive_selection_argmax(const SelectionState& state, const GmrfModel& model,
                                MetricVariant variant, double* best_value = nullptr);

// Residual-minimizing support over all supports of size <= k_max, by direct
// least squares. Slow; certifies the greedy recovery on small instances.
struct SupportFit {
    std::vector<int> support;
    double residual_norm = 0.0;
};
SupportFit exhaustive_support_oracle(const WhitenedSystem& sys, int k_max);

// Union-find connectivity check, an independent oracle for the BFS one.
bool union_find_connected(const GridTopology& topo, const std::vector<bool>& line_alive);

} // namespace oracle
} // namespace gridloc
