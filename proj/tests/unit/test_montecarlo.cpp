#include "mexp/montecarlo.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace mexp;
using namespace mexp::testing;

namespace {

const State kX0(1.0, Belief::two_state(0.5));

PathConfig coarse_paths(std::uint64_t seed) { return PathConfig::for_horizon(1.0, 1e-2, seed, 100); }

}  // namespace

TEST(EvaluateStrategy, ZeroExposureGivesUtilityOfStart) {
    const Problem pr = informative_problem();
    const auto est = evaluate_strategy(pr, constant_strategy(0.0), kX0, 500, coarse_paths(1), {});
    EXPECT_EQ(est.mean, pr.utility()(1.0));
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_EQ(est.total_purchases, 0);
    EXPECT_EQ(est.count_histogram.size(), 1u);
}

TEST(EvaluateStrategy, ThreadCountDoesNotChangeEstimate) {
    const Problem pr = informative_problem();
    const auto a = evaluate_strategy(pr, myopic_strategy(pr), kX0, 3000, coarse_paths(8), {1, true});
    const auto b = evaluate_strategy(pr, myopic_strategy(pr), kX0, 3000, coarse_paths(8), {4, true});
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    ASSERT_EQ(a.paths.size(), b.paths.size());
    for (std::size_t i = 0; i < a.paths.size(); ++i) EXPECT_EQ(a.paths[i].utility, b.paths[i].utility);
}

TEST(EvaluateStrategy, MertonPolicyMatchesClosedForm) {
    const Problem pr = merton_problem();
    const Solution sol = solve_hjbqvi(pr, small_grid(), SolverSettings{});
    const Policy pol = extract_policy(pr, sol, 1e-9);
    const auto est =
        evaluate_strategy(pr, policy_strategy(pol), kX0, 20000, PathConfig::for_horizon(1.0, 1e-3, 99, 1000), {});
    const double exact = merton_value(merton_rate(0.1, 0.25, 0.5, 0.0, 2.0), 0.5, 1.0, 0.0, 1.0);
    EXPECT_LT(std::abs(est.mean - exact), 3.0 * est.std_error) << est.mean << " vs " << exact;
    EXPECT_EQ(est.total_purchases, 0);
}

TEST(Martingale, FrozenBeliefFreeValueHasNoIncrements) {
    Problem pr = merton_problem();
    pr.model.Q.setZero();
    const GridAxes a{{0.0, 1.0, 11}, {0.0, 4.0, 41}, {0.0, 1.0, 5}};
    NodeField v(a);
    const PowerUtility u = pr.utility();
    for (int k = 0; k < a.t.n; ++k)
        for (int i = 0; i < a.w.n; ++i)
            for (int j = 0; j < a.p.n; ++j) v.at(k, i, j) = u(a.w.node(i));
    const auto rep =
        martingale_diagnostic(pr, v, constant_strategy(0.0), kX0, 200, coarse_paths(3), 0.5, RunOptions{});
    EXPECT_EQ(rep.mean_path_increment, 0.0);
    EXPECT_EQ(rep.std_error, 0.0);
    EXPECT_TRUE(rep.pass);
}

TEST(Martingale, SuboptimalTradingIsDetected) {
    const Problem pr = informative_problem();
    const Solution sol = solve_hjbqvi(pr, small_grid(), SolverSettings{});
    const auto cfg = PathConfig::for_horizon(1.0, 1e-3, 5, 1000);
    const auto rep = martingale_diagnostic(pr, sol.value, constant_strategy(0.0), kX0, 5000, cfg, 0.6, RunOptions{});
    EXPECT_LT(rep.mean_path_increment + 3.0 * rep.std_error, 0.0) << rep.mean_path_increment;
    EXPECT_FALSE(rep.pass);
}

TEST(EvaluateStrategy, PolicyPathsAreStructurallySound) {
    const Problem pr = informative_problem();
    const Solution sol = solve_hjbqvi(pr, small_grid(), SolverSettings{});
    const Policy pol = extract_policy(pr, sol, 1e-9);
    const auto est =
        evaluate_strategy(pr, policy_strategy(pol), kX0, 4000, PathConfig::for_horizon(1.0, 1e-3, 21, 1000), {});
    EXPECT_GT(est.total_purchases, 0);
    EXPECT_EQ(est.structural_violations, 0);
    EXPECT_LE(est.max_purchases, 100);
    long long counted = 0;
    for (std::size_t n = 0; n < est.count_histogram.size(); ++n) counted += est.count_histogram[n];
    EXPECT_EQ(counted, 4000);

    std::ostringstream out, ev;
    write_outcomes_csv(out, est);
    write_events_csv(ev, est);
    const std::string o = out.str(), e = ev.str();
    EXPECT_EQ(std::count(o.begin(), o.end(), '\n'), 4001);
    EXPECT_EQ(std::count(e.begin(), e.end(), '\n'), est.total_purchases + 1);
}

TEST(ComparePdeMc, AllowanceScalesWithGrid) {
    const GridAxes a{{0.0, 1.0, 11}, {0.0, 2.0, 21}, {0.0, 1.0, 11}};
    EXPECT_NEAR(discretization_scale(a), 0.1 + 0.01 + 0.01, 1e-15);
    NodeField v(a, 2.0);
    StrategyEstimate est;
    est.mean = 2.05;
    est.std_error = 0.01;
    EXPECT_TRUE(compare_pde_mc(v, est, 0.0, kX0, 0.5).pass);
    EXPECT_FALSE(compare_pde_mc(v, est, 0.0, kX0, 0.1).pass);
}
