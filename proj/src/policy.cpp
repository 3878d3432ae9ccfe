#include "mexp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace mexp {

Policy policy_from_fields(const Problem& pr, const NodeField& gap, const NodeField& pi_hat, const NodeField& q_hat,
                          double region_tol) {
    const GridAxes& axes = gap.axes();
    Policy pol{axes, NodeField(axes), pi_hat, NodeField(axes, std::numeric_limits<double>::quiet_NaN()), gap,
               region_tol, pr.model.pi_lo, pr.model.pi_hi, pr.cost};
    for (std::size_t idx = 0; idx < axes.size(); ++idx) {
        const bool buy = gap.data()[idx] <= region_tol;
        pol.region.data()[idx] = buy ? 1.0 : 0.0;
        if (buy) pol.q_hat.data()[idx] = q_hat.data()[idx];
    }
    return pol;
}

Policy extract_policy(const Problem& pr, const Solution& sol, double region_tol) {
    NodeField gap(sol.axes);
    for (std::size_t idx = 0; idx < sol.axes.size(); ++idx)
        gap.data()[idx] = sol.value.data()[idx] - sol.m_value.data()[idx];
    return policy_from_fields(pr, gap, sol.pi_star, sol.q_star, region_tol);
}

Action policy_at(const Policy& policy, double t, const State& x) {
    const GridAxes& a = policy.axes;
    const int k = time_slice_at(a.t, t);
    const auto lw = a.w.locate(x.w);
    const auto lp = a.p.locate(x.p[0]);
    const bool clamped = lw.clamped || lp.clamped || t < a.t.lo || t > a.t.hi;

    const double wt[2][2] = {{(1 - lw.theta) * (1 - lp.theta), (1 - lw.theta) * lp.theta},
                             {lw.theta * (1 - lp.theta), lw.theta * lp.theta}};
    double pi = 0.0, q = 0.0;
    bool all_buy = true;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj) {
            const double wgt = wt[di][dj];
            const int i = lw.cell + di, j = lp.cell + dj;
            pi += wgt * policy.pi_hat.at(k, i, j);
            if (wgt > 0.0) {
                if (policy.at(k, i, j) != Region::kPurchase) all_buy = false;
                else q += wgt * policy.q_hat.at(k, i, j);
            }
        }
    Action act{std::clamp(pi, policy.pi_lo, policy.pi_hi), std::nullopt, clamped};
    if (all_buy) {
        const auto chi = policy.cost.chi(t, x.w);
        if (chi) act.q = std::clamp(q, 0.0, *chi);
    }
    return act;
}

std::vector<BoundarySegment> purchase_segments(const NodeField& region) {
    const GridAxes& a = region.axes();
    std::vector<BoundarySegment> out;
    for (int k = 0; k < a.t.n; ++k)
        for (int j = 0; j < a.p.n; ++j) {
            int start = -1;
            for (int i = 0; i <= a.w.n; ++i) {
                const bool buy = i < a.w.n && region.at(k, i, j) != 0.0;
                if (buy && start < 0) start = i;
                if (!buy && start >= 0) {
                    out.push_back({a.t.node(k), a.p.node(j), a.w.node(start), a.w.node(i - 1)});
                    start = -1;
                }
            }
        }
    return out;
}

std::vector<BoundarySegment> purchase_segments(const Policy& policy) { return purchase_segments(policy.region); }

std::vector<double> min_purchase_wealth(const Policy& policy) {
    const GridAxes& a = policy.axes;
    std::vector<double> out(a.t.n, std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < a.t.n; ++k)
        for (int i = 0; i < a.w.n && std::isnan(out[k]); ++i)
            for (int j = 0; j < a.p.n; ++j)
                if (policy.at(k, i, j) == Region::kPurchase) {
                    out[k] = a.w.node(i);
                    break;
                }
    return out;
}

long long purchase_node_count(const Policy& policy) {
    return std::count_if(policy.region.data().begin(), policy.region.data().end(), [](double r) { return r != 0.0; });
}

void write_segments_csv(std::ostream& out, const std::vector<BoundarySegment>& segs) {
    out << "t,p,w_lo,w_hi\n" << std::setprecision(17);
    for (const auto& s : segs) out << s.t << ',' << s.p << ',' << s.w_lo << ',' << s.w_hi << '\n';
}

}  // namespace mexp
