#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridloc/decision.hpp"
#include "gridloc/scenario.hpp"
#include "gridloc/selection.hpp"

namespace gridloc {

enum class TrialMode { Adaptive, Prespecified, Full };

TrialMode trial_mode_from_name(const std::string& name);
std::string trial_mode_name(TrialMode mode);

struct RunOptions {
    TrialMode mode = TrialMode::Adaptive;
    int ell = 1;
    int budget = 0;      // measurements; 0 = unlimited
    double gamma = 0.0;  // residual stopping threshold; 0 = decide only at the end
    double noise_fraction = 0.0;
    bool exhaustive_selection = false;
    bool per_event_whitening = false; // general per-hypothesis loop; identical
                                      // result under shared noise covariance
};

struct StepStats {
    int taken = 0;              // buses measured this step
    long evaluations = 0;       // candidate metric evaluations
    int anchors_consulted = 0;  // restricted rule only
    int pool_before = 0;        // unobserved buses before the step
};

struct TrialRecord {
    int true_event = 0;
    int decided_event = 0;
    bool correct = false;
    int measurements_used = 0;
    int steps = 0;
    int ell = 1;
    bool forced_stop = false;
    std::uint64_t seed = 0;
    double residual_norm = 0.0;
    int support_mismatch = 0;
    std::vector<int> support;
    std::vector<std::vector<int>> step_buses; // observation trace (internal ids)
    std::vector<StepStats> step_stats;

    long candidate_evaluations() const {
        long total = 0;
        for (const auto& s : step_stats) total += s.evaluations;
        return total;
    }
};

// Couples selection and decision; owns the per-model selection tables.
class Simulator {
public:
    Simulator(const GmrfModel& model, const EventSet& events);

    TrialRecord run_trial(const RunOptions& opt, int true_event, std::uint64_t seed) const;

    // One-shot baseline: the top-budget buses by informative degree.
    TrialRecord run_baseline_prespecified(const RunOptions& opt, int true_event,
                                          std::uint64_t seed) const;

    const GmrfModel& model() const { return model_; }
    const EventSet& events() const { return events_; }
    const Eigen::VectorXd& static_scores() const { return static_scores_; }

    // Per-bus std of delta under the normal model at noise level sigma.
    Eigen::VectorXd null_deviation_std(double sigma) const;

private:
    TrialRecord decide_and_record(const std::vector<int>& observed,
                                  const Eigen::VectorXd& theta, const RunOptions& opt,
                                  int true_event, std::uint64_t seed, bool forced,
                                  int steps) const;
    EventMatch decide(const std::vector<int>& observed, const Eigen::VectorXd& theta,
                      const RunOptions& opt, double* residual_norm,
                      std::vector<int>* support) const;

    const GmrfModel& model_;
    const EventSet& events_;
    Eigen::VectorXd static_scores_;
    Eigen::VectorXd null_std_unit_; // per-bus sqrt((B B^T)_ii), sigma = 1
};

struct SweepConfig {
    std::string case_path;
    std::vector<std::string> modes = {"adaptive"};
    std::vector<int> budgets;
    std::vector<int> ells = {1};
    double noise_fraction = 0.01;
    double gamma = 0.0;
    double beta = -1.0; // when >= 0, gamma comes from calibration
    int trials = 100;
    std::uint64_t base_seed = 1;
    std::string events = "single_outage";
    std::vector<std::vector<int>> explicit_events;
    int eta_max = 0;
    bool exhaustive_selection = false;
    int calibration_trials = 500;
};

SweepConfig load_sweep_config(const std::string& path);

struct SweepRow {
    std::string mode;
    int budget = 0;
    int ell = 0;
    int trials = 0;
    double accuracy = 0.0;
    double ci95 = 0.0;
    double mean_measurements = 0.0;
    double mean_steps = 0.0;
    double forced_stop_rate = 0.0;
};

// One row per (mode, budget, ell) cell; trial t uses seed base_seed + t and a
// true event drawn uniformly from the anomalous events. Deterministic.
std::vector<SweepRow> run_accuracy_sweep(const SweepConfig& cfg);
std::vector<SweepRow> run_accuracy_sweep(const Simulator& sim, const SweepConfig& cfg);

// Exact column order: mode,budget,ell,trials,accuracy,ci95,mean_measurements,
// mean_steps,forced_stop_rate.
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Aggregates a cell of trial records into a CSV row.
SweepRow aggregate(const std::string& mode, int budget, int ell,
                   const std::vector<TrialRecord>& records);

} // namespace gridloc
