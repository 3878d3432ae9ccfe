#pragma once

// Post-solve structural checks on a value grid and its policy.

#include "mexp/policy.hpp"
#include "mexp/solver.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mexp {

struct InvariantCheck {
    std::string name;
    bool pass;
    double measure;  // worst observed quantity for the check
};

struct InvariantReport {
    std::vector<InvariantCheck> checks;
    ResidualReport residuals;

    [[nodiscard]] bool pass() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Terminal and zero-wealth conditions (exact), V >= 0, monotonicity in w
/// (1e-9 slack), V <= psi, V - M[V] >= -obstacle_tol, the region labels at
/// w < k0 and at T, and the HJBQVI residuals.
[[nodiscard]] InvariantReport check_invariants(const Problem& pr, const GridSpec& grid,
                                               const SolverSettings& settings, const Solution& sol,
                                               const Policy& policy);

}  // namespace mexp
