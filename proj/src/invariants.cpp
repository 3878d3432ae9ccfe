#include "mexp/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mexp {

bool InvariantReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.pass; });
}

nlohmann::json InvariantReport::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : checks) list.push_back({{"name", c.name}, {"pass", c.pass}, {"measure", c.measure}});
    return {{"pass", pass()},
            {"checks", list},
            {"residuals",
             {{"scheme_tol", residuals.scheme_tol},
              {"min_interior", residuals.min_interior},
              {"min_layer", residuals.min_layer},
              {"min_gap", residuals.min_gap},
              {"n_interior", residuals.n_interior},
              {"n_layer", residuals.n_layer},
              {"worst_node", {residuals.worst_k, residuals.worst_i, residuals.worst_j}}}}};
}

InvariantReport check_invariants(const Problem& pr, const GridSpec& grid, const SolverSettings& settings,
                                 const Solution& sol, const Policy& policy) {
    const GridAxes& a = sol.axes;
    const int nt = a.t.n, nw = a.w.n, np = a.p.n;
    const PowerUtility u = pr.utility();
    InvariantReport rep;

    double terminal = 0.0;
    for (int i = 0; i < nw; ++i)
        for (int j = 0; j < np; ++j) terminal = std::max(terminal, std::abs(sol.value.at(nt - 1, i, j) - u(a.w.node(i))));
    rep.checks.push_back({"terminal_equals_utility", terminal == 0.0, terminal});

    double zero = 0.0;
    for (int k = 0; k < nt; ++k)
        for (int j = 0; j < np; ++j) zero = std::max(zero, std::abs(sol.value.at(k, 0, j)));
    rep.checks.push_back({"zero_wealth_boundary", zero == 0.0, zero});

    const double vmin = *std::min_element(sol.value.data().begin(), sol.value.data().end());
    rep.checks.push_back({"nonnegative", vmin >= 0.0, vmin});

    double drop = 0.0;
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i + 1 < nw; ++i)
            for (int j = 0; j < np; ++j) drop = std::max(drop, sol.value.at(k, i, j) - sol.value.at(k, i + 1, j));
    rep.checks.push_back({"monotone_in_wealth", drop <= 1e-9, drop});

    const auto psi = SupersolutionBound::for_model(pr.model, settings.psi_c_factor);
    psi.validate(pr.model);
    double excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nw; ++i) {
            const double bound = psi_bound(psi, a.t.node(k), a.w.node(i));
            for (int j = 0; j < np; ++j) excess = std::max(excess, sol.value.at(k, i, j) - bound);
        }
    rep.checks.push_back({"below_supersolution", excess <= 0.0, excess});

    rep.residuals = hjbqvi_residuals(pr, grid, settings, sol);
    rep.checks.push_back({"obstacle_gap", rep.residuals.min_gap >= -settings.obstacle_tol, rep.residuals.min_gap});
    rep.checks.push_back({"residual_interior", rep.residuals.min_interior >= -rep.residuals.scheme_tol,
                          rep.residuals.min_interior});
    rep.checks.push_back(
        {"residual_free_boundary_layer", rep.residuals.min_layer >= -rep.residuals.scheme_tol, rep.residuals.min_layer});

    long long poor = 0, late = 0;
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nw; ++i)
            for (int j = 0; j < np; ++j) {
                if (policy.at(k, i, j) != Region::kPurchase) continue;
                if (a.w.node(i) < pr.cost.k0()) ++poor;
                if (k == nt - 1) ++late;
            }
    rep.checks.push_back({"continue_below_k0", poor == 0, static_cast<double>(poor)});
    rep.checks.push_back({"continue_at_horizon", late == 0, static_cast<double>(late)});
    return rep;
}

}  // namespace mexp
