#pragma once

// Continuation / purchase regions and the feedback maps pi-hat and q-hat.

#include "mexp/filter.hpp"
#include "mexp/grid.hpp"
#include "mexp/model.hpp"
#include "mexp/solver.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace mexp {

enum class Region : int { kContinue = 0, kPurchase = 1 };

struct Policy {
    GridAxes axes;
    NodeField region;  // 0 = continue, 1 = purchase
    NodeField pi_hat;
    NodeField q_hat;   // NaN off the purchase region
    NodeField gap;     // V - M[V]
    double region_tol = 1e-9;
    double pi_lo = 0.0, pi_hi = 1.0;
    CostModel cost;

    [[nodiscard]] Region at(int k, int i, int j) const {
        return region.at(k, i, j) != 0.0 ? Region::kPurchase : Region::kContinue;
    }
};

/// Purchase iff V - M[V] <= region_tol.
[[nodiscard]] Policy extract_policy(const Problem& pr, const Solution& sol, double region_tol);

/// Rebuilds a policy from stored gap, pi-hat and q-hat fields.
[[nodiscard]] Policy policy_from_fields(const Problem& pr, const NodeField& gap, const NodeField& pi_hat,
                                        const NodeField& q_hat, double region_tol);

struct Action {
    double pi;
    std::optional<double> q;  // purchase quality, if any
    bool clamped;             // query was outside the grid box
};

/// Feedback action at (t, x) using the time slice governing t. A state is a
/// purchase state iff every node with positive bilinear weight is a purchase
/// node; q is then the interpolated q-hat clamped to [0, chi(t,x)].
[[nodiscard]] Action policy_at(const Policy& policy, double t, const State& x);

struct BoundarySegment {
    double t;
    double p;
    double w_lo;
    double w_hi;
};

/// Runs of purchase nodes along w for every (t, p) node line.
[[nodiscard]] std::vector<BoundarySegment> purchase_segments(const Policy& policy);
/// Same, from a stored region field (nonzero = purchase).
[[nodiscard]] std::vector<BoundarySegment> purchase_segments(const NodeField& region);

/// Lowest-wealth purchase node per time slice (NaN when the slice has none).
[[nodiscard]] std::vector<double> min_purchase_wealth(const Policy& policy);

[[nodiscard]] long long purchase_node_count(const Policy& policy);

void write_segments_csv(std::ostream& out, const std::vector<BoundarySegment>& segs);

}  // namespace mexp
