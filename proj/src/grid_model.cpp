#include "gridloc/grid_model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

namespace gridloc {

int GridTopology::internal_index(int external_id) const {
    for (int i = 0; i < n_buses; ++i)
        if (bus_ids[i] == external_id) return i;
    throw ValidationError("unknown bus id " + std::to_string(external_id));
}

int GridTopology::informative_degree(int bus) const {
    int d = 0;
    for (int nb : neighbors[bus])
        if (nb != reference) ++d;
    return d;
}

int GridTopology::line_between(int a, int b) const {
    for (const auto& [line, other] : incident[a])
        if (other == b) return line;
    return -1;
}

GridTopology build_topology(const RawCase& c) {
    c.validate();
    GridTopology topo;
    topo.n_buses = static_cast<int>(c.buses.size());
    topo.bus_ids.reserve(c.buses.size());
    std::map<int, int> internal;
    for (const auto& b : c.buses) {
        internal[b.id] = static_cast<int>(topo.bus_ids.size());
        topo.bus_ids.push_back(b.id);
    }

    topo.neighbors.resize(topo.n_buses);
    topo.incident.resize(topo.n_buses);
    for (const auto& br : c.branches) {
        if (!br.in_service) continue;
        Line line;
        line.from = internal[br.from];
        line.to = internal[br.to];
        line.x = br.x;
        const int idx = topo.n_lines();
        topo.lines.push_back(line);
        topo.neighbors[line.from].push_back(line.to);
        topo.neighbors[line.to].push_back(line.from);
        topo.incident[line.from].emplace_back(idx, line.to);
        topo.incident[line.to].emplace_back(idx, line.from);
    }
    for (auto& nbs : topo.neighbors) std::sort(nbs.begin(), nbs.end());

    // connectivity
    {
        std::vector<int> comp(topo.n_buses, -1);
        int n_comp = 0;
        for (int s = 0; s < topo.n_buses; ++s) {
            if (comp[s] >= 0) continue;
            std::vector<int> stack{s};
            comp[s] = n_comp;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (int v : topo.neighbors[u])
                    if (comp[v] < 0) {
                        comp[v] = n_comp;
                        stack.push_back(v);
                    }
            }
            ++n_comp;
        }
        if (n_comp > 1) {
            std::string msg = "graph is disconnected; components:";
            for (int k = 0; k < n_comp; ++k) {
                msg += " {";
                bool first = true;
                for (int i = 0; i < topo.n_buses; ++i)
                    if (comp[i] == k) {
                        if (!first) msg += ",";
                        msg += std::to_string(topo.bus_ids[i]);
                        first = false;
                    }
                msg += "}";
            }
            throw ValidationError(msg);
        }
    }

    // reference: slack if present, else max degree with lowest id
    int slack = -1;
    for (size_t i = 0; i < c.buses.size(); ++i)
        if (c.buses[i].type == BusType::Slack) slack = static_cast<int>(i);
    if (slack >= 0) {
        topo.reference = slack;
    } else {
        int best = 0;
        for (int i = 1; i < topo.n_buses; ++i)
            if (topo.neighbors[i].size() > topo.neighbors[best].size()) best = i;
        topo.reference = best;
    }
    return topo;
}

Eigen::MatrixXd full_laplacian(const GridTopology& topo) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(topo.n_buses, topo.n_buses);
    for (const auto& line : topo.lines) {
        const double w = 1.0 / line.x;
        h(line.from, line.from) += w;
        h(line.to, line.to) += w;
        h(line.from, line.to) -= w;
        h(line.to, line.from) -= w;
    }
    return h;
}

Eigen::MatrixXd reduced_laplacian(const GridTopology& topo) {
    const Eigen::MatrixXd h = full_laplacian(topo);
    const int n = topo.n_buses;
    Eigen::MatrixXd out(n - 1, n - 1);
    int ri = 0;
    for (int i = 0; i < n; ++i) {
        if (i == topo.reference) continue;
        int rj = 0;
        for (int j = 0; j < n; ++j) {
            if (j == topo.reference) continue;
            out(ri, rj) = h(i, j);
            ++rj;
        }
        ++ri;
    }
    return out;
}

Eigen::MatrixXd invert_laplacian(const Eigen::MatrixXd& h_reduced) {
    Eigen::LLT<Eigen::MatrixXd> llt(h_reduced);
    if (llt.info() != Eigen::Success)
        throw NumericalError("reduced Laplacian is not positive definite");
    const int n = static_cast<int>(h_reduced.rows());
    Eigen::MatrixXd b = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const double resid = (h_reduced * b - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-9))
        throw NumericalError("inverse residual " + std::to_string(resid) + " exceeds 1e-9");
    return b;
}

GmrfCoefficients gmrf_coefficients(const GridTopology& topo) {
    GmrfCoefficients coeffs;
    coeffs.beta.resize(topo.n_buses);
    coeffs.rows.resize(topo.n_buses);
    for (int i = 0; i < topo.n_buses; ++i) {
        double sum = 0.0;
        for (const auto& [line, other] : topo.incident[i]) sum += 1.0 / topo.lines[line].x;
        coeffs.beta[i] = 1.0 / sum;
        auto& row = coeffs.rows[i];
        for (const auto& [line, other] : topo.incident[i])
            row.emplace_back(other, coeffs.beta[i] / topo.lines[line].x);
        std::sort(row.begin(), row.end());
    }
    return coeffs;
}

void incidence_and_reactance(const GridTopology& topo, Eigen::MatrixXd& m_inc,
                             Eigen::VectorXd& x_diag) {
    m_inc = Eigen::MatrixXd::Zero(topo.n_buses, topo.n_lines());
    x_diag.resize(topo.n_lines());
    for (int i = 0; i < topo.n_lines(); ++i) {
        m_inc(topo.lines[i].from, i) = 1.0;
        m_inc(topo.lines[i].to, i) = -1.0;
        x_diag[i] = 1.0 / topo.lines[i].x;
    }
}

GmrfModel build_model(const RawCase& c) {
    GmrfModel m;
    m.topo = build_topology(c);
    const int n = m.topo.n_buses;

    m.h_reduced = reduced_laplacian(m.topo);
    m.b_reduced = invert_laplacian(m.h_reduced);
    m.coeffs = gmrf_coefficients(m.topo);
    incidence_and_reactance(m.topo, m.m_inc, m.x_diag);

    m.reduced_of.assign(n, -1);
    m.bus_of.clear();
    for (int i = 0; i < n; ++i) {
        if (i == m.topo.reference) continue;
        m.reduced_of[i] = static_cast<int>(m.bus_of.size());
        m.bus_of.push_back(i);
    }

    m.m_reduced.resize(n - 1, m.topo.n_lines());
    for (int r = 0; r < n - 1; ++r) m.m_reduced.row(r) = m.m_inc.row(m.bus_of[r]);

    m.injections = Eigen::VectorXd::Zero(n);
    for (const auto& b : c.buses) m.injections[m.topo.internal_index(b.id)] = b.injection;
    m.p_reduced.resize(n - 1);
    for (int r = 0; r < n - 1; ++r) m.p_reduced[r] = m.injections[m.bus_of[r]];

    m.theta_bar = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd th = m.b_reduced * m.p_reduced;
    for (int r = 0; r < n - 1; ++r) m.theta_bar[m.bus_of[r]] = th[r];
    return m;
}

GmrfModel load_model(const std::string& case_path) {
    return build_model(load_case_file(case_path));
}

} // namespace gridloc
