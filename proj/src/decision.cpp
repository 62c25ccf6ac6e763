#include "gridloc/decision.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SVD>

namespace gridloc {

WhitenedSystem whiten(const Eigen::MatrixXd& b_rows, const Eigen::MatrixXd& sigma_sqrt,
                      const Eigen::VectorXd& delta_obs, const Eigen::MatrixXd& m_reduced) {
    if (b_rows.rows() != delta_obs.size())
        throw NumericalError("whiten: row/observation count mismatch");
    const Eigen::MatrixXd scaled = b_rows * sigma_sqrt;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = 1e-10 * sv[0];
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > cutoff) ++rank;
    if (rank == 0) throw NumericalError("degenerate observation: all singular values below cutoff");

    WhitenedSystem sys;
    sys.rank = rank;
    sys.y = sv.head(rank).cwiseInverse().asDiagonal() *
            (svd.matrixU().leftCols(rank).transpose() * delta_obs);
    sys.a = svd.matrixV().leftCols(rank).transpose() * m_reduced;
    return sys;
}

WhitenedSystem whiten_isotropic(const Eigen::MatrixXd& b_rows, double sigma,
                                const Eigen::VectorXd& delta_obs,
                                const Eigen::MatrixXd& m_reduced) {
    const int n = static_cast<int>(b_rows.cols());
    const double scale = sigma > 0.0 ? sigma : 1.0;
    return whiten(b_rows, scale * Eigen::MatrixXd::Identity(n, n), delta_obs, m_reduced);
}

OmpResult omp_localize(const WhitenedSystem& sys, double gamma, int eta_max) {
    const int n_lines = static_cast<int>(sys.a.cols());
    OmpResult out;
    out.s_hat = Eigen::VectorXd::Zero(n_lines);

    Eigen::VectorXd residual = sys.y;
    std::vector<int> support;
    out.residual_path.push_back(residual.norm());
    out.support_path.push_back({});

    Eigen::VectorXd col_norms(n_lines);
    for (int i = 0; i < n_lines; ++i) col_norms[i] = sys.a.col(i).norm();

    while (residual.norm() > gamma && static_cast<int>(support.size()) < eta_max) {
        int pick = -1;
        double best = -1.0;
        for (int i = 0; i < n_lines; ++i) {
            if (col_norms[i] < 1e-14) continue;
            if (std::find(support.begin(), support.end(), i) != support.end()) continue;
            const double c = std::abs(sys.a.col(i).dot(residual)) / col_norms[i];
            if (c > best) {
                best = c;
                pick = i;
            }
        }
        if (pick < 0) break; // nothing usable left

        support.push_back(pick);
        const int k = static_cast<int>(support.size());
        Eigen::MatrixXd at(sys.rank, k);
        for (int j = 0; j < k; ++j) at.col(j) = sys.a.col(support[j]);

        Eigen::VectorXd coef;
        const Eigen::MatrixXd gram = at.transpose() * at;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() == Eigen::Success &&
            gram.diagonal().minCoeff() > 1e-12 * gram.diagonal().maxCoeff()) {
            coef = llt.solve(at.transpose() * sys.y);
        } else {
            // collinear columns: minimum-norm fit
            coef = at.completeOrthogonalDecomposition().solve(sys.y);
            out.rank_deficient_fit = true;
        }
        residual = sys.y - at * coef;

        out.s_hat.setZero();
        for (int j = 0; j < k; ++j) out.s_hat[support[j]] = coef[j];
        std::vector<int> snap = support;
        std::sort(snap.begin(), snap.end());
        out.residual_path.push_back(residual.norm());
        out.support_path.push_back(std::move(snap));
    }

    out.support = support;
    std::sort(out.support.begin(), out.support.end());
    out.residual_norm = residual.norm();
    return out;
}

StopVerdict stop_or_continue(double residual_norm, double gamma, bool unobserved_remaining) {
    if (residual_norm <= gamma) return {true, false};
    if (!unobserved_remaining) return {true, true};
    return {false, false};
}

EventMatch map_support_to_event(const std::vector<int>& support, const EventSet& events) {
    std::vector<int> sorted = support;
    std::sort(sorted.begin(), sorted.end());
    EventMatch best;
    best.event_index = 0;
    best.mismatch = static_cast<int>(sorted.size()); // distance to R_0
    for (const auto& ev : events.events) {
        if (ev.index == 0) continue;
        std::vector<int> diff;
        std::set_symmetric_difference(sorted.begin(), sorted.end(), ev.lines.begin(),
                                      ev.lines.end(), std::back_inserter(diff));
        const int d = static_cast<int>(diff.size());
        if (d < best.mismatch) {
            best.mismatch = d;
            best.event_index = ev.index;
        }
    }
    return best;
}

CalibrationResult calibrate_threshold(const GmrfModel& model, const EventSet& events,
                                      double noise_fraction, double beta, int n_calib,
                                      std::uint64_t seed) {
    if (n_calib < 100) throw ValidationError("calibration needs at least 100 trials");
    if (events.n_anomalous() == 0) throw ValidationError("calibration needs anomalous events");

    const double sigma = injection_noise_sigma(model, noise_fraction);
    const int n = model.n_buses();

    // full observation: every non-reference bus
    Eigen::MatrixXd b_rows = model.b_reduced;
    struct Trial {
        int truth;
        std::vector<double> residuals;
        std::vector<int> decisions; // event decided at each path prefix
    };
    std::vector<Trial> trials;
    trials.reserve(n_calib);

    for (int t = 0; t < n_calib; ++t) {
        const int k = 1 + t % events.n_anomalous();
        Rng rng(seed + static_cast<std::uint64_t>(t));
        const Eigen::VectorXd theta =
            sample_measurement_state(model, events.events[k], sigma, rng);
        Eigen::VectorXd delta(n - 1);
        for (int r = 0; r < n - 1; ++r)
            delta[r] = theta[model.bus_of[r]] - model.theta_bar[model.bus_of[r]];

        const WhitenedSystem sys = whiten_isotropic(b_rows, sigma, delta, model.m_reduced);
        const OmpResult omp = omp_localize(sys, 0.0, events.eta_max);

        Trial trial;
        trial.truth = k;
        trial.residuals = omp.residual_path;
        for (const auto& sup : omp.support_path)
            trial.decisions.push_back(map_support_to_event(sup, events).event_index);
        trials.push_back(std::move(trial));
    }

    // candidate thresholds: every realized residual value, largest first
    std::set<double, std::greater<>> cand;
    for (const auto& tr : trials)
        for (double r : tr.residuals) cand.insert(r);

    auto error_at = [&](double gamma) {
        int wrong = 0;
        for (const auto& tr : trials) {
            int decided = tr.decisions.back(); // forced stop at path end
            for (size_t j = 0; j < tr.residuals.size(); ++j)
                if (tr.residuals[j] <= gamma) {
                    decided = tr.decisions[j];
                    break;
                }
            wrong += decided != tr.truth;
        }
        return static_cast<double>(wrong) / static_cast<double>(trials.size());
    };

    CalibrationResult best;
    best.attainable = false;
    best.empirical_error = 2.0;
    for (double g : cand) {
        const double err = error_at(g);
        if (err <= beta) return {g, err, true}; // largest acceptable threshold
        if (err < best.empirical_error) {
            best.empirical_error = err;
            best.gamma = g;
        }
    }
    return best;
}

} // namespace gridloc
