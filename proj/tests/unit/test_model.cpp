#include "mexp/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mexp;

namespace {

// Root of K(q) = w by bisection on [0, 1).
double bisect_chi(const CostModel& c, double w) {
    double lo = 0.0, hi = 1.0 - 1e-15;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (c.cost(0.0, mid) <= w ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

TEST(PowerUtility, KnownValues) {
    const PowerUtility u{0.5};
    EXPECT_EQ(u(0.0), 0.0);
    EXPECT_DOUBLE_EQ(u(1.0), 2.0);
    EXPECT_NEAR(u(0.99), 2.0 * std::sqrt(0.99), 1e-15);
    EXPECT_THROW((void)u(-1e-3), std::domain_error);
}

TEST(CostModel, FeeFormula) {
    const CostModel c(0.01, 0.05);
    EXPECT_DOUBLE_EQ(c.cost(0.0, 0.0), 0.01);
    EXPECT_NEAR(c.cost(0.3, 0.5), 0.06, 1e-15);
    EXPECT_GT(c.cost(0.0, 1.0 - 1e-12), 1e9);
    EXPECT_THROW((void)c.cost(0.0, 1.0), std::domain_error);
    EXPECT_THROW((void)c.cost(0.0, -0.1), std::domain_error);
    double prev = c.cost(0.0, 0.0);
    for (int i = 1; i < 1000; ++i) {
        const double k = c.cost(0.0, i / 1000.0);
        EXPECT_GT(k, prev);
        prev = k;
    }
}

TEST(CostModel, ChiMatchesBisection) {
    const CostModel c(0.01, 0.05);
    EXPECT_FALSE(c.chi(0.0, 0.005).has_value());
    EXPECT_EQ(*c.chi(0.0, 0.01), 0.0);
    EXPECT_NEAR(*c.chi(0.0, 0.06), 0.5, 1e-14);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> w(0.01, 50.0);
    for (int i = 0; i < 500; ++i) {
        const double wi = w(rng);
        EXPECT_NEAR(*c.chi(0.0, wi), bisect_chi(c, wi), 1e-12) << "w = " << wi;
    }
}

TEST(NoiseModel, GaussHermiteMoments) {
    const QuadratureRule r = gauss_hermite_normal(16);
    double m0 = 0, m2 = 0, m4 = 0, m6 = 0, m1 = 0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        const double x = r.nodes[k], wk = r.weights[k];
        m0 += wk;
        m1 += wk * x;
        m2 += wk * x * x;
        m4 += wk * std::pow(x, 4);
        m6 += wk * std::pow(x, 6);
    }
    EXPECT_NEAR(m0, 1.0, 1e-14);
    EXPECT_NEAR(m1, 0.0, 1e-14);
    EXPECT_NEAR(m2, 1.0, 1e-13);
    EXPECT_NEAR(m4, 3.0, 1e-12);
    EXPECT_NEAR(m6, 15.0, 1e-11);

    const NoiseModel n(0.1, 16);
    EXPECT_NEAR(n.expectation([](double x) { return x * x; }), 0.01, 1e-15);
}

TEST(ModelParams, ValidateRejectsBadGenerator) {
    ModelParams m;
    m.mu = Eigen::Vector2d(0.1, 0.1);
    m.Q = (Eigen::Matrix2d() << -1, 1, 1, -0.5).finished();
    m.p0 = Eigen::Vector2d(0.5, 0.5);
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m.Q = (Eigen::Matrix2d() << -1, 1, 1, -1).finished();
    EXPECT_NO_THROW(m.validate());
    m.sigma = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}
