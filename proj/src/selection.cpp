#include "gridloc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gridloc {

double info_log_term(double r) {
    const double rc = clamp_r(r);
    return std::log(1.0 / (1.0 - rc * rc));
}

namespace {

// anomalous-model subset term: log(1 - r~^2) + 2 r^2 / (1 - r~^2)
double anomalous_subset_term(double r) {
    const double rc = clamp_r(r);
    const double c = 1.0 - rc * rc;
    return std::log(c) + 2.0 * r * r / c;
}

// Maximizes (sum of chosen terms) / (|chosen| + shift) over subsets of the
// given non-negative terms; shift = 1 accounts for a self element contributing
// zero. Prefix of the descending sort is optimal; the mean first rises then
// falls, and on exact ties the longer prefix is kept.
SubsetScore prefix_max(const std::vector<double>& terms, int shift, bool allow_empty) {
    std::vector<int> order(terms.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return terms[a] != terms[b] ? terms[a] > terms[b] : a < b; });

    SubsetScore best;
    best.score = allow_empty ? 0.0 : -std::numeric_limits<double>::infinity();
    double run = 0.0;
    for (size_t m = 0; m < order.size(); ++m) {
        run += terms[order[m]];
        const double mean = run / static_cast<double>(m + 1 + shift);
        if (mean >= best.score) {
            best.score = mean;
            best.members.assign(order.begin(), order.begin() + static_cast<long>(m + 1));
        }
    }
    std::sort(best.members.begin(), best.members.end());
    return best;
}

} // namespace

SubsetScore best_subset_mean(const std::vector<double>& terms) {
    if (terms.empty()) return {};
    return prefix_max(terms, 0, false);
}

SubsetScore restricted_subset_score(const std::vector<std::pair<int, double>>& neighbor_r) {
    std::vector<double> terms;
    terms.reserve(neighbor_r.size());
    for (const auto& [nb, r] : neighbor_r) terms.push_back(info_log_term(r));
    SubsetScore s = best_subset_mean(terms);
    for (int& m : s.members) m = neighbor_r[static_cast<size_t>(m)].first;
    return s;
}

namespace {

double r_of(const std::vector<std::pair<int, double>>& row, int bus) {
    for (const auto& [nb, v] : row)
        if (nb == bus) return v;
    return 0.0;
}

double observed_term(MetricVariant variant, const SelectionState& state,
                     const std::vector<std::pair<int, double>>& r_row) {
    double sum = 0.0;
    for (const auto& [nb, r] : r_row) {
        auto it = state.delta.find(nb);
        if (it == state.delta.end()) continue;
        const double d2 = it->second * it->second;
        if (variant == MetricVariant::Normal) {
            sum += info_log_term(r) + r * r * (d2 - 1.0);
        } else {
            const double rc = clamp_r(r);
            const double c = 1.0 - rc * rc;
            sum += std::log(c) + r * r * (d2 + 1.0) / c;
        }
    }
    return 0.5 * sum;
}

double subset_term_value(MetricVariant variant, double r) {
    return variant == MetricVariant::Normal ? info_log_term(r) : anomalous_subset_term(r);
}

} // namespace

std::pair<double, double> binary_metrics(int bus, const SelectionState& state,
                                         const std::vector<std::pair<int, double>>& r_row,
                                         const std::vector<int>& candidate_set) {
    double m0 = observed_term(MetricVariant::Normal, state, r_row);
    double m1 = observed_term(MetricVariant::Anomalous, state, r_row);
    if (!candidate_set.empty()) {
        double s0 = 0.0, s1 = 0.0;
        for (int j : candidate_set) {
            if (j == bus) continue; // r_ii = 0, contributes nothing
            const double r = r_of(r_row, j);
            s0 += subset_term_value(MetricVariant::Normal, r);
            s1 += subset_term_value(MetricVariant::Anomalous, r);
        }
        const double denom = 2.0 * static_cast<double>(candidate_set.size());
        m0 += s0 / denom;
        m1 += s1 / denom;
    }
    return {m0, m1};
}

double general_metric(int bus, const SelectionState& state,
                      const std::vector<std::pair<int, double>>& r_row,
                      const std::vector<int>& candidate_set) {
    return binary_metrics(bus, state, r_row, candidate_set).first;
}

double best_restricted_metric(int bus, const SelectionState& state, const GmrfModel& model,
                              MetricVariant variant, std::vector<int>* best_set) {
    const auto& r_row = model.coeffs.rows[bus];
    std::vector<double> terms;
    std::vector<int> who;
    for (const auto& [nb, r] : r_row) {
        if (state.is_observed(nb)) continue;
        terms.push_back(subset_term_value(variant, r));
        who.push_back(nb);
    }
    // S = {bus} + chosen neighbors; |S| counts the self element
    SubsetScore sub = prefix_max(terms, 1, true);
    if (best_set) {
        best_set->clear();
        best_set->push_back(bus);
        for (int m : sub.members) best_set->push_back(who[static_cast<size_t>(m)]);
        std::sort(best_set->begin(), best_set->end());
    }
    return observed_term(variant, state, r_row) + 0.5 * sub.score;
}

Eigen::VectorXd compute_static_scores(const GmrfModel& model) {
    Eigen::VectorXd scores(model.n_buses());
    for (int i = 0; i < model.n_buses(); ++i)
        scores[i] = restricted_subset_score(model.coeffs.rows[i]).score;
    return scores;
}

std::vector<int> select_initial(const GmrfModel& model, int ell) {
    const int n = model.n_buses();
    if (ell > n)
        throw ValidationError("cannot select " + std::to_string(ell) + " of " +
                              std::to_string(n) + " buses");
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const int da = model.topo.informative_degree(a);
        const int db = model.topo.informative_degree(b);
        return da != db ? da > db : a < b;
    });
    order.resize(ell);
    return order;
}

std::vector<int> select_next(const SelectionState& state, const GmrfModel& model,
                             long* evaluations, int* anchors_consulted) {
    const int n = model.n_buses();
    long evals = 0;
    int consulted = 0;
    std::vector<int> picked;
    std::set<int> taken;
    auto want = [&] { return static_cast<int>(picked.size()) < state.ell; };
    auto available = [&](int b) { return !state.is_observed(b) && !taken.count(b); };

    // stage 1: observed buses with significant deviation, largest first
    std::vector<int> anchors;
    for (int b : state.observed) {
        const double floor =
            state.anchor_floor.size() == n ? state.anchor_floor[b] : 1e-12;
        auto it = state.delta.find(b);
        if (it != state.delta.end() && std::abs(it->second) > floor) anchors.push_back(b);
    }
    std::sort(anchors.begin(), anchors.end(), [&](int a, int b) {
        const double da = std::abs(state.delta.at(a));
        const double db = std::abs(state.delta.at(b));
        return da != db ? da > db : a < b;
    });

    // stage 2: walk the anchors, pulling each one's unobserved neighbors in
    // descending static score
    for (int a : anchors) {
        if (!want()) break;
        std::vector<int> cand;
        for (int nb : model.topo.neighbors[a])
            if (available(nb)) cand.push_back(nb);
        if (cand.empty()) continue;
        ++consulted;
        evals += static_cast<long>(cand.size());
        std::sort(cand.begin(), cand.end(), [&](int x, int y) {
            return state.static_scores[x] != state.static_scores[y]
                       ? state.static_scores[x] > state.static_scores[y]
                       : x < y;
        });
        for (int nb : cand) {
            if (!want()) break;
            picked.push_back(nb);
            taken.insert(nb);
        }
    }

    // fallback: globally best-scored unobserved buses
    if (want()) {
        std::vector<int> rest;
        for (int b = 0; b < n; ++b)
            if (available(b)) rest.push_back(b);
        evals += static_cast<long>(rest.size());
        std::sort(rest.begin(), rest.end(), [&](int x, int y) {
            return state.static_scores[x] != state.static_scores[y]
                       ? state.static_scores[x] > state.static_scores[y]
                       : x < y;
        });
        for (int b : rest) {
            if (!want()) break;
            picked.push_back(b);
            taken.insert(b);
        }
    }
    if (evaluations) *evaluations = evals;
    if (anchors_consulted) *anchors_consulted = consulted;
    return picked;
}

std::vector<int> select_next_exhaustive(const SelectionState& state, const GmrfModel& model,
                                        long* evaluations) {
    const int n = model.n_buses();
    std::vector<std::pair<double, int>> scored;
    for (int b = 0; b < n; ++b) {
        if (state.is_observed(b)) continue;
        scored.emplace_back(best_restricted_metric(b, state, model, MetricVariant::Normal),
                            b);
    }
    if (evaluations) *evaluations = static_cast<long>(scored.size());
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> picked;
    for (const auto& [score, b] : scored) {
        if (static_cast<int>(picked.size()) >= state.ell) break;
        picked.push_back(b);
    }
    return picked;
}

} // namespace gridloc
