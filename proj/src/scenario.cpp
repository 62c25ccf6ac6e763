#include "gridloc/scenario.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace gridloc {

bool is_connected(const GridTopology& topo, const std::vector<bool>& line_alive) {
    if (topo.n_buses == 0) return true;
    std::vector<char> seen(topo.n_buses, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const auto& [line, other] : topo.incident[u]) {
            if (!line_alive[line] || seen[other]) continue;
            seen[other] = 1;
            ++count;
            stack.push_back(other);
        }
    }
    return count == topo.n_buses;
}

namespace {

std::string lines_to_string(const GridTopology& topo, const std::vector<int>& lines) {
    std::string s = "{";
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(topo.bus_ids[topo.lines[lines[i]].from]) + "-" +
             std::to_string(topo.bus_ids[topo.lines[lines[i]].to]);
    }
    return s + "}";
}

// Per-event coupling coefficients from the surviving line weights.
GmrfCoefficients event_coefficients(const GridTopology& topo, const Eigen::VectorXd& weights) {
    GmrfCoefficients coeffs;
    coeffs.beta.resize(topo.n_buses);
    coeffs.rows.resize(topo.n_buses);
    for (int i = 0; i < topo.n_buses; ++i) {
        double sum = 0.0;
        for (const auto& [line, other] : topo.incident[i]) sum += weights[line];
        coeffs.beta[i] = sum > 0.0 ? 1.0 / sum : 0.0;
        auto& row = coeffs.rows[i];
        for (const auto& [line, other] : topo.incident[i])
            if (weights[line] > 0.0) row.emplace_back(other, coeffs.beta[i] * weights[line]);
        std::sort(row.begin(), row.end());
    }
    return coeffs;
}

} // namespace

EventHypothesis event_model(const GmrfModel& model, const std::vector<int>& lines,
                            const std::map<int, double>& post_x) {
    const GridTopology& topo = model.topo;
    EventHypothesis ev;
    ev.lines = lines;
    std::sort(ev.lines.begin(), ev.lines.end());

    Eigen::VectorXd weights = model.x_diag; // 1/x per line, nominal
    std::vector<bool> alive(topo.n_lines(), true);
    for (int line : ev.lines) {
        if (line < 0 || line >= topo.n_lines())
            throw ValidationError("event references unknown line index " + std::to_string(line));
        auto it = post_x.find(line);
        const double w = it == post_x.end() ? 0.0 : 1.0 / it->second;
        ev.post_weight[line] = w;
        weights[line] = w;
        if (w == 0.0) alive[line] = false;
    }
    if (!is_connected(topo, alive))
        throw ValidationError("event " + lines_to_string(topo, ev.lines) +
                              " disconnects the grid");

    const int n = topo.n_buses;
    // direct construction from surviving weights
    Eigen::MatrixXd h_full = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < topo.n_lines(); ++i) {
        if (weights[i] == 0.0) continue;
        const auto& line = topo.lines[i];
        h_full(line.from, line.from) += weights[i];
        h_full(line.to, line.to) += weights[i];
        h_full(line.from, line.to) -= weights[i];
        h_full(line.to, line.from) -= weights[i];
    }
    // rank correction on the nominal Laplacian
    Eigen::MatrixXd h_corr = full_laplacian(topo);
    for (int line : ev.lines) {
        const double dw = model.x_diag[line] - weights[line];
        h_corr -= dw * model.m_inc.col(line) * model.m_inc.col(line).transpose();
    }
    const double agree = (h_full - h_corr).cwiseAbs().maxCoeff();
    if (!(agree <= 1e-9))
        throw NumericalError("event Laplacian constructions disagree by " + std::to_string(agree));

    ev.h_reduced.resize(n - 1, n - 1);
    for (int r = 0; r < n - 1; ++r)
        for (int c = 0; c < n - 1; ++c)
            ev.h_reduced(r, c) = h_full(model.bus_of[r], model.bus_of[c]);

    try {
        ev.b_reduced = invert_laplacian(ev.h_reduced);
    } catch (const NumericalError&) {
        throw ValidationError("event " + lines_to_string(topo, ev.lines) +
                              " yields a singular reduced Laplacian");
    }
    ev.coeffs = event_coefficients(topo, weights);

    ev.theta_bar = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd th = ev.b_reduced * model.p_reduced;
    for (int r = 0; r < n - 1; ++r) ev.theta_bar[model.bus_of[r]] = th[r];
    return ev;
}

EventSet enumerate_events(const GmrfModel& model, EventMode mode,
                          const std::vector<std::vector<int>>& explicit_events, int eta_max) {
    EventSet set;
    EventHypothesis normal = event_model(model, {});
    normal.index = 0;
    set.events.push_back(std::move(normal));

    if (mode == EventMode::SingleOutage) {
        std::vector<bool> alive(model.topo.n_lines(), true);
        for (int line = 0; line < model.topo.n_lines(); ++line) {
            alive[line] = false;
            const bool ok = is_connected(model.topo, alive);
            alive[line] = true;
            if (!ok) continue;
            EventHypothesis ev = event_model(model, {line});
            ev.index = set.size();
            set.events.push_back(std::move(ev));
        }
        set.eta_max = eta_max > 0 ? eta_max : 1;
    } else {
        int max_size = 1;
        for (const auto& lines : explicit_events) {
            std::set<int> uniq(lines.begin(), lines.end());
            if (uniq.size() != lines.size())
                throw ValidationError("event line set contains duplicates");
            EventHypothesis ev = event_model(model, lines); // throws if disconnecting
            ev.index = set.size();
            max_size = std::max(max_size, static_cast<int>(lines.size()));
            set.events.push_back(std::move(ev));
        }
        set.eta_max = eta_max > 0 ? eta_max : max_size;
        for (const auto& ev : set.events)
            if (static_cast<int>(ev.lines.size()) > set.eta_max)
                throw ValidationError("event " + lines_to_string(model.topo, ev.lines) +
                                      " exceeds eta_max=" + std::to_string(set.eta_max));
    }
    return set;
}

Eigen::VectorXd nominal_state(const GmrfModel& model) {
    Eigen::VectorXd th = Eigen::VectorXd::Zero(model.n_buses());
    const Eigen::VectorXd red = model.b_reduced * model.p_reduced;
    for (int r = 0; r < model.n_buses() - 1; ++r) th[model.bus_of[r]] = red[r];
    return th;
}

double injection_noise_sigma(const GmrfModel& model, double noise_fraction) {
    return noise_fraction * model.p_reduced.cwiseAbs().mean();
}

Eigen::VectorXd sample_measurement_state(const GmrfModel& model, const EventHypothesis& event,
                                         double sigma, Rng& rng) {
    const int n = model.n_buses();
    Eigen::VectorXd p = model.p_reduced;
    if (sigma > 0.0)
        for (int r = 0; r < n - 1; ++r) p[r] += rng.normal(0.0, sigma);
    else
        return event.theta_bar;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd red = event.b_reduced * p;
    for (int r = 0; r < n - 1; ++r) theta[model.bus_of[r]] = red[r];
    return theta;
}

Eigen::VectorXd sparse_signal(const GmrfModel& model, const EventHypothesis& event,
                              const Eigen::VectorXd& theta_full) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(model.n_lines());
    for (int line : event.lines) {
        const auto& ln = model.topo.lines[line];
        const double dw = model.x_diag[line] - event.post_weight.at(line);
        s[line] = dw * (theta_full[ln.from] - theta_full[ln.to]);
    }
    return s;
}

} // namespace gridloc
