#pragma once

// Backward explicit finite-difference solver for the HJB quasi-variational
// inequality of the two-regime problem on a uniform (t, w, p) grid.
//
// Time stepping per grid interval [t_k, t_{k+1}]:
//   1. `time_substeps` explicit continuation steps V <- V + dt max_pi L_pi V,
//      with upwind drift, central second differences where they are monotone,
//      and a directional (semi-Lagrangian) second difference along the
//      rank-one diffusion direction where they are not;
//   2. obstacle passes V <- max(V, M[V]) at t_k until no node moves by more
//      than `obstacle_tol`, settling wealth rows in ascending order;
//   3. V(t_k, 0, p) = 0.
// At w = w_max the wealth derivatives come from the asymptotic homogeneity
// V ~ w^(1-alpha) g(t,p); no Dirichlet value is imposed.

#include "mexp/filter.hpp"
#include "mexp/grid.hpp"
#include "mexp/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mexp {

struct GridSpec {
    int n_t = 201;            // stored time levels on [0, T]
    int time_substeps = 16;   // explicit continuation steps per interval
    int n_w = 101;
    double w_max = 4.0;
    int n_p = 51;
    int n_q = 21;             // quality levels scanned on [0, chi]

    [[nodiscard]] GridAxes axes(double T) const;
    [[nodiscard]] double dt(double T) const { return T / ((n_t - 1) * static_cast<double>(time_substeps)); }
};

enum class CrossFallback { kDirectional, kDrop };

struct SolverSettings {
    double obstacle_tol = 1e-10;
    double region_tol = 1e-9;
    double cfl_safety = 0.95;
    double sl_kappa = 1.0;  // directional stencil uses delta = sl_kappa * T * dp
    CrossFallback cross_fallback = CrossFallback::kDirectional;
    int n_pi = 9;           // extra trading-fraction candidates where the stencil is directional
    int max_sweeps = 0;     // passes per wealth row; 0: ceil(w_max / k0) + 1
    double psi_c_factor = 1.05;
    double residual_c = 2.0;  // scheme_tol = residual_c * (Dt + dw^2 + dp^2)
    int threads = 1;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised before any stepping when dt exceeds the explicit stability bound.
struct CflViolation : SolverError {
    using SolverError::SolverError;
};

/// psi(t,w) = (A + w^(1-beta)/(1-beta)) e^{C (T-t)}.
struct SupersolutionBound {
    double A = 0.0;
    double C = 1.0;
    double beta = 0.5;
    double T = 1.0;

    /// beta = alpha, A = 0, C = factor * (1-beta) pi_max mu_max (factor > 1).
    [[nodiscard]] static SupersolutionBound for_model(const ModelParams& m, double c_factor);
    /// Throws std::invalid_argument if the Hamiltonian inequality or the
    /// terminal ordering can fail.
    void validate(const ModelParams& m) const;
};

[[nodiscard]] double psi_bound(const SupersolutionBound& b, double t, double w);

/// f.r + 1/2 tr(Sigma Sigma^T M) for the state (w, p^1..p^N); grad has
/// length 1+N and hess is (1+N)x(1+N), wealth first.
[[nodiscard]] double hamiltonian(const ModelParams& m, const State& x, double pi, const Eigen::VectorXd& grad,
                                 const Eigen::MatrixXd& hess);

struct HamiltonianArgmax {
    double pi;
    double value;
};

/// Exact maximization of the (quadratic in pi) Hamiltonian over
/// [pi_lo, pi_hi]; ties go to the smaller |pi|.
[[nodiscard]] HamiltonianArgmax maximize_hamiltonian(const ModelParams& m, const State& x,
                                                     const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess);

struct InterventionValue {
    double value;              // -1 when no purchase is affordable
    std::optional<double> q;   // maximizing quality, smallest on ties
};

/// M[v](t,x) for a two-regime value slice: max over n_q uniform qualities in
/// [0, chi] of the regime-weighted quadrature expectation of v after the jump.
[[nodiscard]] InterventionValue intervention_value(const Problem& pr, int n_q, const SliceView& v, double t,
                                                   const State& x);

struct SolverDiagnostics {
    double dt = 0.0;
    double cfl_number = 0.0;        // dt * max coefficient sum
    long long node_steps = 0;
    long long directional_node_steps = 0;  // nodes where the central cross stencil was not monotone
    long long dropped_cross_node_steps = 0;
    int max_sweeps_used = 0;       // most obstacle passes any wealth row needed
    long long total_sweeps = 0;    // obstacle passes summed over rows and levels
    std::vector<int> sweeps_per_level;
};

struct Solution {
    GridAxes axes;
    NodeField value;    // V
    NodeField m_value;  // M[V]; -1 where nothing is affordable
    NodeField pi_star;  // continuation argmax
    NodeField q_star;   // intervention argmax; NaN where nothing is affordable
    SolverDiagnostics diag;
};

/// Throws CflViolation before stepping and SolverError on NaN or a
/// non-convergent obstacle sweep.
[[nodiscard]] Solution solve_hjbqvi(const Problem& pr, const GridSpec& grid, const SolverSettings& settings);

/// Largest stable explicit step for the grid (before the safety factor).
[[nodiscard]] double explicit_step_bound(const Problem& pr, const GridSpec& grid, const SolverSettings& settings);

struct ResidualReport {
    double scheme_tol = 0.0;
    double min_interior = 0.0;  // min{F, V - M[V]} with F from one step of the generator
    double min_layer = 0.0;     // same, with F from the scheme's own interval propagator
    double min_gap = 0.0;       // min over all nodes of V - M[V]
    long long n_interior = 0;
    long long n_layer = 0;
    int worst_k = 0, worst_i = 0, worst_j = 0;
    bool pass = false;
};

/// Discrete HJBQVI residuals for w > 0. Nodes whose 3x3 neighbourhood at t_k
/// and t_{k+1} is free of purchase nodes use the pointwise generator; nodes in
/// the free-boundary layer, where the obstacle leaves kinks, use the
/// propagator of one grid interval instead.
[[nodiscard]] ResidualReport hjbqvi_residuals(const Problem& pr, const GridSpec& grid, const SolverSettings& settings,
                                              const Solution& sol);

}  // namespace mexp
