#pragma once

// Wonham filter algebra: belief drift and diffusion between expert opinions,
// the Bayes update after an opinion, and the state-jump map of a purchase.

#include "mexp/model.hpp"

#include <Eigen/Dense>

#include <random>
#include <stdexcept>

namespace mexp {

/// A point of the probability simplex.
class Belief {
public:
    Belief() = default;
    /// Throws std::invalid_argument unless p lies on the simplex (1e-12).
    explicit Belief(Eigen::VectorXd p);

    /// Clamp negatives to zero and renormalize.
    [[nodiscard]] static Belief project(Eigen::VectorXd p);
    /// Two-regime belief (p, 1-p).
    [[nodiscard]] static Belief two_state(double p1);

    [[nodiscard]] const Eigen::VectorXd& probs() const { return p_; }
    [[nodiscard]] double operator[](Eigen::Index n) const { return p_(n); }
    [[nodiscard]] Eigen::Index size() const { return p_.size(); }

private:
    Eigen::VectorXd p_;
};

/// Wealth and belief, x = (w, p).
struct State {
    double w = 0.0;
    Belief p;

    State() = default;
    /// Throws std::invalid_argument for negative wealth.
    State(double wealth, Belief belief);
};

struct InfeasiblePurchase : std::domain_error {
    using std::domain_error::domain_error;
};

/// Q^T p.
[[nodiscard]] Eigen::VectorXd belief_drift(const ModelParams& m, const Belief& p);

/// (diag(mu) - mu^T p) p / sigma.
[[nodiscard]] Eigen::VectorXd belief_diffusion(const ModelParams& m, const Belief& p);

/// Posterior regime law after observing opinion z of quality q. Densities
/// are combined in log space with a max shift so that tiny (1-q) does not
/// underflow.
[[nodiscard]] Belief bayes_update(const Problem& pr, double z, const Belief& p, double q);

/// Relative update factors with bayes_update = p + zeta * p (componentwise).
[[nodiscard]] Eigen::VectorXd zeta(const Problem& pr, double z, const Belief& p, double q);

/// Post-purchase state (w - K(t,q), bayes_update(z,p,q)). Throws
/// InfeasiblePurchase when w < K(t,q).
[[nodiscard]] State jump_map(const Problem& pr, double z, double t, const State& x, double q);

/// Opinion value q mu^n + (1-q) eps with eps drawn from the noise model.
template <class Rng>
[[nodiscard]] double sample_opinion(const Problem& pr, double q, int regime, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double eps = pr.noise.std_dev() * normal(rng);
    return q * pr.model.mu(regime) + (1.0 - q) * eps;
}

}  // namespace mexp
