#pragma once

// Discrete operators shared by the solver and its residual check.

#include "mexp/grid.hpp"
#include "mexp/model.hpp"
#include "mexp/solver.hpp"

#include <span>
#include <vector>

namespace mexp::detail {

enum class StencilMode { kGrid, kSevenPoint, kDirectional, kDropped };

/// max over pi of the discrete generator L_pi V at a node of one slice.
class Continuation {
public:
    Continuation(const Problem& pr, const GridAxes& axes, const SolverSettings& settings);

    struct Result {
        double value;
        double pi;
        StencilMode mode;
    };
    [[nodiscard]] Result evaluate(std::span<const double> v, int i, int j) const;

    /// Largest diagonal coefficient magnitude over pi at node (i,j); the
    /// explicit step is monotone when dt times this is at most one.
    [[nodiscard]] double coefficient_bound(int i, int j) const;

    [[nodiscard]] const GridAxes& axes() const { return axes_; }

private:
    struct Node {
        double w, p, m, fp, sp;
    };

    [[nodiscard]] double at(std::span<const double> v, int i, int j) const {
        return v[static_cast<std::size_t>(i) * np_ + j];
    }
    /// Bilinear sample with homogeneous extension beyond w_max.
    [[nodiscard]] double sample(std::span<const double> v, double w, double p) const;
    [[nodiscard]] Result evaluate_boundary(std::span<const double> v, int j) const;

    const Problem* pr_;
    GridAxes axes_;
    SolverSettings settings_;
    int nw_, np_;
    double dw_, dp_, delta_, root_delta_, g_;
    std::vector<Node> nodes_;
    std::vector<double> pi_grid_;
};

/// Precomputed post-purchase locations for the intervention operator on a
/// two-regime grid; the jump targets do not depend on time.
class InterventionTable {
public:
    InterventionTable(const Problem& pr, const GridAxes& axes, int n_q);

    struct Result {
        double value;  // -1 when nothing is affordable
        double q;      // NaN when nothing is affordable
    };
    [[nodiscard]] Result evaluate(std::span<const double> v, int i, int j) const;

    /// Highest wealth row any purchase from row i can reach, or -1 if none.
    [[nodiscard]] int top_row(int i) const { return top_row_[i]; }

private:
    struct Jump {
        double q;
        int cell;
        double theta;
    };

    int nw_, np_, nq_, nz_;
    std::vector<int> top_row_;
    std::vector<Jump> jumps_;        // [i][l]
    std::vector<double> reg_w_;      // [j][n][z] regime-and-node weights
    std::vector<int> p_cell_;        // [i][l][j][n][z]
    std::vector<double> p_theta_;
};

}  // namespace mexp::detail
