#include "gridloc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

namespace gridloc {
namespace oracle {

double gaussian_kl(const GaussianModel& p, const GaussianModel& q) {
    const int d = static_cast<int>(p.mean.size());
    if (q.mean.size() != d || p.covariance.rows() != d || q.covariance.rows() != d)
        throw NumericalError("gaussian_kl: dimension mismatch");

    Eigen::LLT<Eigen::MatrixXd> lp(p.covariance);
    Eigen::LLT<Eigen::MatrixXd> lq(q.covariance);
    if (lp.info() != Eigen::Success || lq.info() != Eigen::Success)
        throw NumericalError("gaussian_kl: covariance not positive definite");

    auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
        return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    };
    const Eigen::MatrixXd qi_p = lq.solve(p.covariance);
    const Eigen::VectorXd dm = q.mean - p.mean;
    const double quad = dm.dot(lq.solve(dm));
    return 0.5 * (qi_p.trace() + quad - d + logdet(lq) - logdet(lp));
}

int exhaustive_selection_argmax(const SelectionState& state, const GmrfModel& model,
                                MetricVariant variant, double* best_value) {
    const int n = model.n_buses();
    if (n > 12)
        throw ValidationError("exhaustive selection oracle refuses models above 12 buses");

    std::vector<int> unobserved;
    for (int b = 0; b < n; ++b)
        if (!state.is_observed(b)) unobserved.push_back(b);
    if (unobserved.empty()) throw ValidationError("no unobserved buses");

    int arg = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i : unobserved) {
        std::vector<int> others;
        for (int b : unobserved)
            if (b != i) others.push_back(b);
        const auto& row = model.coeffs.rows[i];
        double inner = -std::numeric_limits<double>::infinity();
        const unsigned long total = 1ul << others.size();
        for (unsigned long mask = 0; mask < total; ++mask) {
            std::vector<int> subset{i};
            for (size_t j = 0; j < others.size(); ++j)
                if (mask & (1ul << j)) subset.push_back(others[j]);
            const auto [m0, m1] = binary_metrics(i, state, row, subset);
            inner = std::max(inner, variant == MetricVariant::Normal ? m0 : m1);
        }
        if (inner > best) {
            best = inner;
            arg = i;
        }
    }
    if (best_value) *best_value = best;
    return arg;
}

namespace {

void enumerate_supports(int n_cols, int k_max, std::vector<int>& cur,
                        const std::function<void(const std::vector<int>&)>& fn, int first) {
    if (!cur.empty()) fn(cur);
    if (static_cast<int>(cur.size()) == k_max) return;
    for (int i = first; i < n_cols; ++i) {
        cur.push_back(i);
        enumerate_supports(n_cols, k_max, cur, fn, i + 1);
        cur.pop_back();
    }
}

} // namespace

SupportFit exhaustive_support_oracle(const WhitenedSystem& sys, int k_max) {
    const int n_cols = static_cast<int>(sys.a.cols());
    SupportFit best;
    best.residual_norm = sys.y.norm(); // empty support
    std::vector<int> cur;
    enumerate_supports(
        n_cols, k_max, cur,
        [&](const std::vector<int>& sup) {
            Eigen::MatrixXd at(sys.rank, sup.size());
            for (size_t j = 0; j < sup.size(); ++j) at.col(static_cast<int>(j)) = sys.a.col(sup[j]);
            const Eigen::VectorXd coef = at.completeOrthogonalDecomposition().solve(sys.y);
            const double res = (sys.y - at * coef).norm();
            if (res < best.residual_norm) {
                best.residual_norm = res;
                best.support = sup;
            }
        },
        0);
    std::sort(best.support.begin(), best.support.end());
    return best;
}

bool union_find_connected(const GridTopology& topo, const std::vector<bool>& line_alive) {
    std::vector<int> parent(topo.n_buses);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    int components = topo.n_buses;
    for (int i = 0; i < topo.n_lines(); ++i) {
        if (!line_alive[i]) continue;
        const int a = find(topo.lines[i].from);
        const int b = find(topo.lines[i].to);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

} // namespace oracle
} // namespace gridloc
