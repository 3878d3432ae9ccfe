#include "mexp/filter.hpp"
#include "mexp/rng.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mexp;
using mexp::testing::two_regime;

namespace {

// Posterior of regime 1 from the Gaussian opinion likelihood, in long double.
long double posterior_oracle(long double mu1, long double mu2, long double sd, long double p, long double q,
                             long double z) {
    const long double s = (1 - q) * sd;
    const long double r1 = (z - q * mu1) / s, r2 = (z - q * mu2) / s;
    const long double l1 = std::exp(-0.5L * r1 * r1), l2 = std::exp(-0.5L * r2 * r2);
    return p * l1 / (p * l1 + (1 - p) * l2);
}

}  // namespace

TEST(BeliefDrift, GeneratorTimesBelief) {
    ModelParams m = two_regime(0.1, 0.1).model;
    m.Q = (Eigen::Matrix2d() << -1, 1, 2, -2).finished();
    const Eigen::VectorXd d = belief_drift(m, Belief::two_state(1.0));
    EXPECT_DOUBLE_EQ(d(0), -1.0);
    EXPECT_DOUBLE_EQ(d(1), 1.0);
    const Eigen::VectorXd s = belief_drift(m, Belief::two_state(2.0 / 3.0));
    EXPECT_NEAR(s.norm(), 0.0, 1e-15);
    m.Q.setZero();
    EXPECT_EQ(belief_drift(m, Belief::two_state(0.3)).norm(), 0.0);
}

TEST(BeliefDiffusion, KnownValues) {
    const ModelParams m = two_regime(0.4, -0.2).model;
    const Eigen::VectorXd d = belief_diffusion(m, Belief::two_state(0.5));
    EXPECT_NEAR(d(0), 0.6, 1e-15);
    EXPECT_NEAR(d(1), -0.6, 1e-15);
    EXPECT_EQ(belief_diffusion(m, Belief::two_state(1.0)).norm(), 0.0);
    EXPECT_EQ(belief_diffusion(two_regime(0.1, 0.1).model, Belief::two_state(0.3)).norm(), 0.0);
}

TEST(BayesUpdate, MatchesHighPrecisionQuotient) {
    const Problem pr = two_regime(0.4, -0.2, 1.0);
    const Belief post = bayes_update(pr, 0.4, Belief::two_state(0.5), 0.5);
    const long double oracle = posterior_oracle(0.4L, -0.2L, 1.0L, 0.5L, 0.5L, 0.4L);
    EXPECT_NEAR(post[0], static_cast<double>(oracle), 1e-14);
    EXPECT_NEAR(post[0], 0.60348, 5e-6);
    const Eigen::VectorXd zt = zeta(pr, 0.4, Belief::two_state(0.5), 0.5);
    EXPECT_NEAR(zt(0), static_cast<double>(oracle / 0.5L - 1), 1e-14);
    EXPECT_NEAR(zt(0), 0.20696, 1e-5);
}

TEST(BayesUpdate, RandomizedAgainstOracle) {
    const Problem pr = two_regime(0.4, -0.2, 0.1);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20000; ++i) {
        const double p = u(rng), q = 0.99 * u(rng), z = -1.0 + 2.0 * u(rng);
        const Belief b = bayes_update(pr, z, Belief::two_state(p), q);
        EXPECT_NEAR(b.probs().sum(), 1.0, 1e-12);
        EXPECT_GE(b[0], 0.0);
        EXPECT_LE(b[0], 1.0);
        const long double o = posterior_oracle(0.4L, -0.2L, 0.1L, p, q, z);
        if (std::isfinite(static_cast<double>(o))) EXPECT_NEAR(b[0], static_cast<double>(o), 1e-12);
        const Eigen::VectorXd zt = zeta(pr, z, Belief::two_state(p), q);
        EXPECT_NEAR(p + zt(0) * p, b[0], 1e-12);
    }
}

TEST(BayesUpdate, NoiseOnlyAndCertaintyAreFixedPoints) {
    const Problem pr = two_regime(0.4, -0.2, 0.1);
    for (double z : {-3.0, 0.0, 0.4, 7.0}) {
        const Belief p = Belief::two_state(0.37);
        EXPECT_EQ(bayes_update(pr, z, p, 0.0).probs(), p.probs());
        EXPECT_EQ(zeta(pr, z, p, 0.0).norm(), 0.0);
        EXPECT_EQ(bayes_update(pr, z, Belief::two_state(1.0), 0.8)[0], 1.0);
        EXPECT_EQ(bayes_update(pr, z, Belief::two_state(0.0), 0.8)[0], 0.0);
    }
}

TEST(BayesUpdate, NearPerfectOpinionStaysFinite) {
    const Problem pr = two_regime(0.4, -0.2, 0.1);
    const Belief b = bayes_update(pr, 0.4, Belief::two_state(0.5), 1.0 - 1e-12);
    EXPECT_TRUE(std::isfinite(b[0]));
    EXPECT_NEAR(b[0], 1.0, 1e-12);
}

TEST(JumpMap, WealthAndBelief) {
    const Problem pr = two_regime(0.4, -0.2, 0.1);
    const State x(1.0, Belief::two_state(0.5));
    const State y = jump_map(pr, 0.1, 0.0, x, 0.5);
    EXPECT_NEAR(y.w, 0.94, 1e-15);
    const State z = jump_map(pr, 0.1, 0.0, x, 0.0);
    EXPECT_DOUBLE_EQ(z.w, 0.99);
    EXPECT_EQ(z.p.probs(), x.p.probs());
    const State edge = jump_map(pr, 0.1, 0.0, State(pr.cost.cost(0.0, 0.5), Belief::two_state(0.5)), 0.5);
    EXPECT_EQ(edge.w, 0.0);
    EXPECT_THROW((void)jump_map(pr, 0.1, 0.0, State(0.005, Belief::two_state(0.5)), 0.0), InfeasiblePurchase);
}

TEST(SampleOpinion, SeedReproducesDraw) {
    const Problem pr = two_regime(0.4, -0.2, 0.1);
    auto a = make_stream(5, 3, Stream::kOpinion);
    auto b = make_stream(5, 3, Stream::kOpinion);
    EXPECT_EQ(sample_opinion(pr, 0.3, 1, a), sample_opinion(pr, 0.3, 1, b));
    const Problem quiet = two_regime(0.4, -0.2, 1e-300);
    EXPECT_DOUBLE_EQ(sample_opinion(quiet, 0.3, 0, a), 0.3 * 0.4);
}
