#pragma once

// Problem data for the Merton problem with purchasable expert opinions:
// market and regime chain parameters, power utility, expert-opinion cost,
// and the expert-noise density with its quadrature rule.

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mexp {

/// Market, hidden chain, and preference parameters.
struct ModelParams {
    Eigen::VectorXd mu;   // per-regime drift
    double sigma = 0.25;  // volatility
    Eigen::MatrixXd Q;    // generator of the regime chain
    double T = 1.0;
    double alpha = 0.5;   // relative risk aversion
    double pi_lo = 0.0;
    double pi_hi = 1.0;
    Eigen::VectorXd p0;   // initial regime law

    [[nodiscard]] int n_regimes() const { return static_cast<int>(mu.size()); }
    [[nodiscard]] double pi_max() const;
    [[nodiscard]] double mu_max() const;

    /// Throws std::invalid_argument naming the violated invariant.
    void validate() const;
};

/// Power utility U(w) = w^(1-alpha) / (1-alpha).
struct PowerUtility {
    double alpha = 0.5;

    /// Throws std::domain_error for negative wealth.
    [[nodiscard]] double operator()(double w) const;
};

/// Expert-opinion fee K(t,q) = k0 + k1 q/(1-q).
class CostModel {
public:
    CostModel() = default;
    CostModel(double k0, double k1);

    [[nodiscard]] double k0() const { return k0_; }
    [[nodiscard]] double k1() const { return k1_; }
    [[nodiscard]] double k_min() const { return k0_; }

    /// Throws std::domain_error unless q is in [0,1).
    [[nodiscard]] double cost(double t, double q) const;

    /// Largest affordable quality, i.e. the root of K(t,q) = w. Empty when
    /// w < k0: no purchase is affordable.
    [[nodiscard]] std::optional<double> chi(double t, double w) const;

    [[nodiscard]] bool affordable(double /*t*/, double w) const { return w >= k0_; }

private:
    double k0_ = 0.01;
    double k1_ = 0.05;
};

/// Centered Gaussian expert noise with a normalized Gauss-Hermite rule.
class NoiseModel {
public:
    NoiseModel() : NoiseModel(1.0, 16) {}
    NoiseModel(double std_dev, int n_quad);

    [[nodiscard]] double std_dev() const { return std_dev_; }
    [[nodiscard]] int n_quad() const { return static_cast<int>(nodes_.size()); }
    /// Quadrature abscissae for the noise value (already scaled by std_dev).
    [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
    /// Quadrature weights, summing to one.
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }

    [[nodiscard]] double density(double x) const;
    /// log density up to the additive normalizing constant.
    [[nodiscard]] double log_kernel(double x) const { return -0.5 * x * x * inv_var_; }

    template <class F>
    [[nodiscard]] double expectation(F&& f) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < nodes_.size(); ++j) acc += weights_[j] * f(nodes_[j]);
        return acc;
    }

private:
    double std_dev_;
    double inv_var_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Nodes and weights of the n-point Gauss rule for the standard normal
/// density (probabilists' Hermite); weights sum to one.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
[[nodiscard]] QuadratureRule gauss_hermite_normal(int n);

/// Everything the filter, solver, and simulator need to know about the model.
struct Problem {
    ModelParams model;
    CostModel cost;
    NoiseModel noise;

    [[nodiscard]] PowerUtility utility() const { return PowerUtility{model.alpha}; }
};

}  // namespace mexp
