#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridloc/grid_model.hpp"

namespace gridloc {

// Coupling coefficients clamped away from 1 inside singular terms: leaf buses
// have r = 1, which would make log(1/(1-r^2)) infinite.
inline double clamp_r(double r) { return r < 1.0 - 1e-6 ? r : 1.0 - 1e-6; }

// log(1/(1 - r~^2)), the per-neighbor information term.
double info_log_term(double r);

enum class MetricVariant { Normal, Anomalous };

struct SubsetScore {
    double score = 0.0;
    std::vector<int> members; // positions into the supplied term list
};

// max over non-empty subsets U of mean(terms in U). Terms are non-negative,
// so the optimum is a prefix of the descending sort; ties keep the longest
// prefix. O(d log d), equivalent to 2^d enumeration.
SubsetScore best_subset_mean(const std::vector<double>& terms);

// Algorithm-1-style static score for one bus given its (neighbor, r) row:
// max over non-empty U subset of N_i of mean_j log(1/(1-r~_ij^2)).
SubsetScore restricted_subset_score(const std::vector<std::pair<int, double>>& neighbor_r);

// Trial-local observation record. `anchor_floor` is the per-bus significance
// level below which a deviation is treated as carrying no location evidence.
struct SelectionState {
    std::vector<int> observed;                 // psi, in observation order
    std::unordered_map<int, double> readings;  // bus -> theta
    std::unordered_map<int, double> delta;     // bus -> theta - theta_bar
    Eigen::VectorXd static_scores;             // per-bus M(i)
    Eigen::VectorXd anchor_floor;              // per-bus, zero when unused
    int ell = 1;

    bool is_observed(int bus) const { return delta.count(bus) > 0; }
};

// The two per-bus metrics for an explicit candidate set S (S contains `bus`;
// the self term contributes zero but counts in |S|). First = normal-model
// metric, second = anomalous-model metric. The observed sum runs over
// observed neighbors only; non-neighbors contribute zero by r_ij = 0.
std::pair<double, double> binary_metrics(int bus, const SelectionState& state,
                                         const std::vector<std::pair<int, double>>& r_row,
                                         const std::vector<int>& candidate_set);

// The per-event metric with event coefficients r^k; with the nominal row it
// equals the simplified single metric used by the engine.
double general_metric(int bus, const SelectionState& state,
                      const std::vector<std::pair<int, double>>& r_row,
                      const std::vector<int>& candidate_set);

// Observed term plus the best neighbor-restricted subset term: the inner
// maximization of the selection rule, searched over S = {bus} + prefix of the
// unobserved neighbors sorted by term value. Exactly matches exhaustive
// enumeration over all unobserved subsets containing `bus`.
double best_restricted_metric(int bus, const SelectionState& state, const GmrfModel& model,
                              MetricVariant variant, std::vector<int>* best_set = nullptr);

// Static scores M(i) over full neighborhoods, computed once per model.
Eigen::VectorXd compute_static_scores(const GmrfModel& model);

// The ell buses of highest informative degree; ties -> lowest bus index.
std::vector<int> select_initial(const GmrfModel& model, int ell);

// Two-stage data-adaptive rule. Stage 1 ranks observed buses with
// significant |delta| descending (ties -> lowest index); stage 2 walks that
// ranking appending each anchor's unobserved neighbors in descending static
// score, falling back to the globally best-scored unobserved buses when the
// anchors are exhausted. Returns at most state.ell new buses; empty when
// everything is observed. Pure function of (state, model).
std::vector<int> select_next(const SelectionState& state, const GmrfModel& model,
                             long* evaluations = nullptr, int* anchors_consulted = nullptr);

// Scores every unobserved bus with the full time-varying metric and takes the
// top ell. Reference comparison for the restricted rule's operation count.
std::vector<int> select_next_exhaustive(const SelectionState& state, const GmrfModel& model,
                                        long* evaluations = nullptr);

} // namespace gridloc
