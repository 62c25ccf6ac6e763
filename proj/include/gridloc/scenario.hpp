#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "gridloc/grid_model.hpp"
#include "gridloc/rng.hpp"

namespace gridloc {

// One hypothesis R_k: a set of anomalous lines with their post-event line
// weights. For an outage the post-event weight 1/x^k is zero.
struct EventHypothesis {
    int index = 0;
    std::vector<int> lines;              // sorted, empty for R_0
    std::map<int, double> post_weight;   // line -> 1/x^k
    Eigen::MatrixXd h_reduced;
    Eigen::MatrixXd b_reduced;
    GmrfCoefficients coeffs;             // per-event r^k rows
    Eigen::VectorXd theta_bar;           // full N, reference entry 0
};

struct EventSet {
    std::vector<EventHypothesis> events; // events[0] is R_0
    int eta_max = 1;

    int size() const { return static_cast<int>(events.size()); }
    int n_anomalous() const { return size() - 1; }
};

struct ScenarioConfig {
    int true_event = 0;
    double noise_fraction = 0.01; // injection noise std as a fraction of mean |p|
    int eta_max = 1;
    std::uint64_t seed = 0;
};

// True iff the buses are spanned by the lines flagged alive.
bool is_connected(const GridTopology& topo, const std::vector<bool>& line_alive);

// Builds one hypothesis. `post_x` gives changed reactances; lines listed but
// absent from `post_x` are outages (removed). The reduced Laplacian is built
// both directly from the surviving weights and through the incidence-based
// rank correction; the two must agree to 1e-9.
EventHypothesis event_model(const GmrfModel& model, const std::vector<int>& lines,
                            const std::map<int, double>& post_x = {});

enum class EventMode { SingleOutage, Explicit };

// SingleOutage: R_0 plus every single-line removal that keeps the graph
// connected, ordered by line index. Explicit: validates the given line sets.
EventSet enumerate_events(const GmrfModel& model, EventMode mode,
                          const std::vector<std::vector<int>>& explicit_events = {},
                          int eta_max = 0);

// theta_bar = B * p (reduced), re-embedded with the reference entry 0.
Eigen::VectorXd nominal_state(const GmrfModel& model);

// sigma = noise_fraction * mean_i |p_i| over non-reference buses.
double injection_noise_sigma(const GmrfModel& model, double noise_fraction);

// Draws theta = B_k (p + n) with n ~ N(0, sigma^2 I); full angle vector with
// the reference entry 0. sigma = 0 reproduces the event nominal state exactly.
Eigen::VectorXd sample_measurement_state(const GmrfModel& model, const EventHypothesis& event,
                                         double sigma, Rng& rng);

// The sparse line-signal s_k built from a realized angle vector:
// s_k[i] = (w0_i - wk_i) * (theta_from - theta_to) on anomalous lines, 0 elsewhere.
Eigen::VectorXd sparse_signal(const GmrfModel& model, const EventHypothesis& event,
                              const Eigen::VectorXd& theta_full);

} // namespace gridloc
