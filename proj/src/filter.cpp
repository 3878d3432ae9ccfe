#include "mexp/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mexp {

Belief::Belief(Eigen::VectorXd p) : p_(std::move(p)) {
    if (p_.size() == 0) throw std::invalid_argument("belief: empty vector");
    if ((p_.array() < 0.0).any() || (p_.array() > 1.0).any())
        throw std::invalid_argument("belief: entries must lie in [0,1]");
    if (std::abs(p_.sum() - 1.0) > 1e-12) throw std::invalid_argument("belief: entries must sum to one");
}

Belief Belief::project(Eigen::VectorXd p) {
    p = p.cwiseMax(0.0);
    const double s = p.sum();
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("belief: cannot project a zero vector");
    p /= s;
    Belief b;
    b.p_ = std::move(p);
    return b;
}

Belief Belief::two_state(double p1) {
    Eigen::VectorXd p(2);
    p << p1, 1.0 - p1;
    return project(std::move(p));
}

State::State(double wealth, Belief belief) : w(wealth), p(std::move(belief)) {
    if (!(w >= 0.0)) throw std::invalid_argument("state: wealth must be non-negative");
}

Eigen::VectorXd belief_drift(const ModelParams& m, const Belief& p) {
    return m.Q.transpose() * p.probs();
}

Eigen::VectorXd belief_diffusion(const ModelParams& m, const Belief& p) {
    // sum_m p^m (mu^n - mu^m) vanishes exactly when all drifts agree
    const Eigen::Index n = m.mu.size();
    Eigen::VectorXd out(n);
    for (Eigen::Index a = 0; a < n; ++a) {
        double acc = 0.0;
        for (Eigen::Index b = 0; b < n; ++b) acc += p[b] * (m.mu(a) - m.mu(b));
        out(a) = p[a] * acc / m.sigma;
    }
    return out;
}

namespace {

// log phi((z - q mu^n)/(1-q)) for every regime, up to a common constant.
Eigen::VectorXd log_likelihoods(const Problem& pr, double z, double q) {
    const auto& mu = pr.model.mu;
    Eigen::VectorXd out(mu.size());
    const double scale = 1.0 / (1.0 - q);
    for (Eigen::Index n = 0; n < mu.size(); ++n) out(n) = pr.noise.log_kernel((z - q * mu(n)) * scale);
    return out;
}

void check_quality(double q) {
    if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("expert opinion quality must lie in [0,1)");
}

}  // namespace

Belief bayes_update(const Problem& pr, double z, const Belief& p, double q) {
    check_quality(q);
    const auto& prior = p.probs();
    Eigen::Index support = 0;
    for (Eigen::Index n = 0; n < prior.size(); ++n) support += prior(n) > 0.0;
    if (support <= 1 || q == 0.0) return p;

    const Eigen::VectorXd ll = log_likelihoods(pr, z, q);
    double shift = -std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < prior.size(); ++n)
        if (prior(n) > 0.0) shift = std::max(shift, ll(n));
    Eigen::VectorXd post(prior.size());
    for (Eigen::Index n = 0; n < prior.size(); ++n)
        post(n) = prior(n) > 0.0 ? prior(n) * std::exp(ll(n) - shift) : 0.0;
    return Belief::project(std::move(post));
}

Eigen::VectorXd zeta(const Problem& pr, double z, const Belief& p, double q) {
    check_quality(q);
    const auto& prior = p.probs();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(prior.size());
    if (q == 0.0) return out;
    const Eigen::VectorXd ll = log_likelihoods(pr, z, q);
    double shift = -std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < prior.size(); ++n)
        if (prior(n) > 0.0) shift = std::max(shift, ll(n));
    double denom = 0.0;
    for (Eigen::Index n = 0; n < prior.size(); ++n)
        if (prior(n) > 0.0) denom += prior(n) * std::exp(ll(n) - shift);
    for (Eigen::Index n = 0; n < prior.size(); ++n)
        out(n) = std::exp(std::min(ll(n) - shift, 700.0)) / denom - 1.0;
    return out;
}

State jump_map(const Problem& pr, double z, double t, const State& x, double q) {
    check_quality(q);
    const double fee = pr.cost.cost(t, q);
    if (x.w < fee) throw InfeasiblePurchase("purchase of quality " + std::to_string(q) + " costs " +
                                            std::to_string(fee) + " but wealth is " + std::to_string(x.w));
    return State(x.w - fee, bayes_update(pr, z, x.p, q));
}

}  // namespace mexp
