#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridloc/scenario.hpp"

namespace gridloc {

// Whitened observation model y = A s + n with identity noise covariance on
// the retained components.
struct WhitenedSystem {
    Eigen::VectorXd y;
    Eigen::MatrixXd a; // rank x L
    int rank = 0;
};

// SVD of b_rows * sigma_sqrt; singular values below 1e-10 * sigma_max are
// discarded. y = pinv(Lambda) U^T delta_obs, A = V^T m_reduced on the
// retained components. Throws NumericalError when everything is below cutoff.
WhitenedSystem whiten(const Eigen::MatrixXd& b_rows, const Eigen::MatrixXd& sigma_sqrt,
                      const Eigen::VectorXd& delta_obs, const Eigen::MatrixXd& m_reduced);

// Isotropic noise sigma * I; sigma = 0 degrades to the identity transform
// (noise-free data needs no whitening, only the SVD change of basis).
WhitenedSystem whiten_isotropic(const Eigen::MatrixXd& b_rows, double sigma,
                                const Eigen::VectorXd& delta_obs,
                                const Eigen::MatrixXd& m_reduced);

struct OmpResult {
    std::vector<int> support;  // sorted line indices
    Eigen::VectorXd s_hat;     // length L
    double residual_norm = 0.0;
    bool rank_deficient_fit = false;
    // residual norm and support after fitting 0..k columns, for threshold scans
    std::vector<double> residual_path;
    std::vector<std::vector<int>> support_path;
};

// Greedy sparse recovery: repeatedly add the column of largest normalized
// correlation (ties -> lowest line index, zero columns skipped), least-squares
// refit on the support, stop when the residual norm falls to gamma or the
// support reaches eta_max. Residual norms are non-increasing.
OmpResult omp_localize(const WhitenedSystem& sys, double gamma, int eta_max);

struct StopVerdict {
    bool stop = false;
    bool forced = false;
};

// Stop when the residual is within gamma, or when no unobserved buses remain
// (forced).
StopVerdict stop_or_continue(double residual_norm, double gamma, bool unobserved_remaining);

struct EventMatch {
    int event_index = 0;
    int mismatch = 0; // |R_k symmetric-difference support|
};

// Empty support -> R_0; exact match -> that event; otherwise the event of
// minimum symmetric difference (ties -> lowest index).
EventMatch map_support_to_event(const std::vector<int>& support, const EventSet& events);

struct CalibrationResult {
    double gamma = 0.0;
    double empirical_error = 0.0;
    bool attainable = true;
};

// Monte Carlo calibration at full observation: anomalous events are cycled
// deterministically, residual paths recorded, and the largest candidate gamma
// whose empirical decision error stays within beta is returned. When no
// candidate satisfies beta the error-minimizing gamma is returned with
// attainable = false.
CalibrationResult calibrate_threshold(const GmrfModel& model, const EventSet& events,
                                      double noise_fraction, double beta, int n_calib,
                                      std::uint64_t seed);

} // namespace gridloc
