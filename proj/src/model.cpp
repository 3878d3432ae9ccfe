#include "mexp/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mexp {

double ModelParams::pi_max() const { return std::max(std::abs(pi_lo), std::abs(pi_hi)); }

double ModelParams::mu_max() const { return mu.size() == 0 ? 0.0 : mu.cwiseAbs().maxCoeff(); }

void ModelParams::validate() const {
    const int n = n_regimes();
    if (n < 1) throw std::invalid_argument("model.mu: at least one regime required");
    if (!(sigma > 0.0)) throw std::invalid_argument("model.sigma: must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("model.T: must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("model.alpha: must lie in (0,1)");
    if (!(pi_lo < pi_hi) || pi_lo > 0.0 || pi_hi < 0.0)
        throw std::invalid_argument("model.pi_lo/pi_hi: need pi_lo < pi_hi and 0 in [pi_lo, pi_hi]");
    if (Q.rows() != n || Q.cols() != n) throw std::invalid_argument("model.Q: must be N x N");
    for (int r = 0; r < n; ++r) {
        double row = 0.0;
        for (int c = 0; c < n; ++c) {
            if (r != c && Q(r, c) < 0.0)
                throw std::invalid_argument("model.Q: off-diagonal entries must be non-negative");
            row += Q(r, c);
        }
        if (std::abs(row) > 1e-12 * (1.0 + Q.row(r).cwiseAbs().sum()))
            throw std::invalid_argument("model.Q: rows must sum to zero");
    }
    if (p0.size() != n) throw std::invalid_argument("model.p0: must have N entries");
    if ((p0.array() < 0.0).any()) throw std::invalid_argument("model.p0: entries must be non-negative");
    if (std::abs(p0.sum() - 1.0) > 1e-12) throw std::invalid_argument("model.p0: must sum to one");
}

double PowerUtility::operator()(double w) const {
    if (w < 0.0) throw std::domain_error("utility: negative wealth " + std::to_string(w));
    return std::pow(w, 1.0 - alpha) / (1.0 - alpha);
}

CostModel::CostModel(double k0, double k1) : k0_(k0), k1_(k1) {
    if (!(k0 > 0.0)) throw std::invalid_argument("cost.k0: must be positive");
    if (!(k1 > 0.0)) throw std::invalid_argument("cost.k1: must be positive");
}

double CostModel::cost(double /*t*/, double q) const {
    if (!(q >= 0.0 && q < 1.0)) throw std::domain_error("cost: quality must lie in [0,1)");
    return k0_ + k1_ * q / (1.0 - q);
}

std::optional<double> CostModel::chi(double /*t*/, double w) const {
    if (!(w >= k0_)) return std::nullopt;
    const double excess = w - k0_;
    // excess/(excess+k1) < 1 for finite w; the clamp covers w = inf.
    return std::min(excess / (excess + k1_), std::nextafter(1.0, 0.0));
}

QuadratureRule gauss_hermite_normal(int n) {
    if (n < 1) throw std::invalid_argument("noise.n_quad: must be at least 1");
    QuadratureRule rule;
    if (n == 1) {
        rule.nodes = {0.0};
        rule.weights = {1.0};
        return rule;
    }
    // Golub-Welsch on the Jacobi matrix of the monic He_k recurrence.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    rule.nodes.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + n);

    // Polish each node by Newton on the orthonormal polynomial and take the
    // Christoffel weights 1 / sum_k psi_k(x)^2.
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = rule.nodes[i];
        double norm2 = 0.0;
        for (int iter = 0; iter < 8; ++iter) {
            double prev = 0.0;
            double cur = 1.0;
            norm2 = 1.0;
            for (int k = 0; k < n - 1; ++k) {
                const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                                    std::sqrt(static_cast<double>(k + 1));
                prev = cur;
                cur = next;
                norm2 += cur * cur;
            }
            // cur = psi_{n-1}, compute psi_n and its derivative sqrt(n) psi_{n-1}
            const double psi_n = (x * cur - std::sqrt(static_cast<double>(n - 1)) * prev) /
                                 std::sqrt(static_cast<double>(n));
            const double dpsi_n = std::sqrt(static_cast<double>(n)) * cur;
            const double step = psi_n / dpsi_n;
            x -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 1.0 / norm2;
    }
    // enforce exact symmetry of the rule
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

NoiseModel::NoiseModel(double std_dev, int n_quad) : std_dev_(std_dev) {
    if (!(std_dev > 0.0)) throw std::invalid_argument("noise.std_dev: must be positive");
    inv_var_ = 1.0 / (std_dev * std_dev);
    auto rule = gauss_hermite_normal(n_quad);
    nodes_ = std::move(rule.nodes);
    for (double& x : nodes_) x *= std_dev;
    weights_ = std::move(rule.weights);
}

double NoiseModel::density(double x) const {
    return std::exp(log_kernel(x)) / (std_dev_ * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace mexp
