#include "mexp/solver.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mexp;
using namespace mexp::testing;

namespace {

// Slice holding f(w, p) on the axes of `g`.
struct Slice {
    GridAxes axes;
    std::vector<double> data;
    template <class F>
    Slice(const GridAxes& a, F&& f) : axes(a), data(a.slice_size()) {
        for (int i = 0; i < a.w.n; ++i)
            for (int j = 0; j < a.p.n; ++j) data[static_cast<std::size_t>(i) * a.p.n + j] = f(a.w.node(i), a.p.node(j));
    }
    [[nodiscard]] SliceView view() const { return SliceView(axes, data); }
};

GridAxes unit_axes(int n_w, double w_max, int n_p) { return GridAxes{{0.0, 1.0, 2}, {0.0, w_max, n_w}, {0.0, 1.0, n_p}}; }

}  // namespace

TEST(Hamiltonian, VanishesWithoutDerivatives) {
    const ModelParams m = informative_problem().model;
    const State x(1.3, Belief::two_state(0.4));
    EXPECT_EQ(hamiltonian(m, x, 0.0, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3)), 0.0);
}

TEST(Hamiltonian, QuadraticCoefficientsMatchExpansion) {
    const ModelParams m = informative_problem().model;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double w = 2.0 * (u(rng) + 1.0), p = 0.5 * (u(rng) + 1.0);
        const State x(w, Belief::two_state(p));
        Eigen::VectorXd g(3);
        g << u(rng), u(rng), u(rng);
        Eigen::MatrixXd a(3, 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(r, c) = u(rng);
        const Eigen::MatrixXd h = a + a.transpose();

        const double mp = m.mu(0) * p + m.mu(1) * (1 - p);
        const double s1 = (m.mu(0) - mp) * p / m.sigma, s2 = (m.mu(1) - mp) * (1 - p) / m.sigma;
        const double lin = w * mp * g(0) + w * m.sigma * (s1 * h(0, 1) + s2 * h(0, 2));
        const double quad = 0.5 * w * w * m.sigma * m.sigma * h(0, 0);
        const double h0 = hamiltonian(m, x, 0.0, g, h);
        for (double pi : {-0.7, 0.3, 1.9}) {
            const double expect = h0 + lin * pi + quad * pi * pi;
            EXPECT_NEAR(hamiltonian(m, x, pi, g, h), expect, 1e-12 * (1 + std::abs(expect)));
        }
    }
}

TEST(Hamiltonian, ZeroWealthIgnoresFraction) {
    const ModelParams m = informative_problem().model;
    const State x(0.0, Belief::two_state(0.3));
    Eigen::VectorXd g(3);
    g << 1.0, 0.4, -0.2;
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(3, 3);
    h(0, 1) = h(1, 0) = 0.5;
    const double h0 = hamiltonian(m, x, 0.0, g, h);
    EXPECT_EQ(hamiltonian(m, x, 1.7, g, h), h0);
    const Eigen::VectorXd f = belief_drift(m, x.p), s = belief_diffusion(m, x.p);
    EXPECT_NEAR(h0, f.dot(g.tail(2)) + 0.5 * s.dot(h.bottomRightCorner(2, 2) * s), 1e-15);
}

TEST(MaximizeHamiltonian, MertonRatioIsClamped) {
    ModelParams m = merton_problem().model;
    const double w = 1.7, alpha = m.alpha;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    g(0) = std::pow(w, -alpha);
    h(0, 0) = -alpha * std::pow(w, -alpha - 1.0);
    const State x(w, Belief::two_state(0.5));
    EXPECT_DOUBLE_EQ(maximize_hamiltonian(m, x, g, h).pi, 2.0);
    m.pi_hi = 5.0;
    EXPECT_NEAR(maximize_hamiltonian(m, x, g, h).pi, 0.1 / (alpha * 0.0625), 1e-12);
}

TEST(MaximizeHamiltonian, ConvexCaseTakesEndpoint) {
    ModelParams m = merton_problem().model;
    m.pi_lo = -1.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
    g(0) = -0.01;
    h(0, 0) = 1.0;
    const auto r = maximize_hamiltonian(m, State(1.0, Belief::two_state(0.5)), g, h);
    EXPECT_TRUE(r.pi == m.pi_lo || r.pi == m.pi_hi);
    EXPECT_DOUBLE_EQ(r.pi, 2.0);
}

TEST(InterventionValue, UnaffordableIsMinusOne) {
    const Problem pr = informative_problem();
    const GridAxes a = unit_axes(41, 4.0, 11);
    const Slice v(a, [](double w, double) { return w; });
    const auto r = intervention_value(pr, 21, v.view(), 0.0, State(0.005, Belief::two_state(0.5)));
    EXPECT_EQ(r.value, -1.0);
    EXPECT_FALSE(r.q.has_value());
}

TEST(InterventionValue, BeliefFreeValueBuysNothingUseful) {
    const Problem pr = informative_problem();
    const GridAxes a = unit_axes(397, 3.96, 11);
    const Slice v(a, [](double w, double) { return 2.0 * std::sqrt(w); });
    const auto r = intervention_value(pr, 21, v.view(), 0.0, State(1.0, Belief::two_state(0.3)));
    ASSERT_TRUE(r.q.has_value());
    EXPECT_EQ(*r.q, 0.0);
    EXPECT_NEAR(r.value, 2.0 * std::sqrt(0.99), 1e-12);
}

TEST(InterventionValue, MonotoneInValues) {
    const Problem pr = informative_problem();
    const GridAxes a = unit_axes(21, 2.0, 9);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Slice v1(a, [&](double w, double) { return w + u(rng); });
        Slice v2 = v1;
        for (double& d : v2.data) d += u(rng);
        for (int s = 0; s < 20; ++s) {
            const State x(0.01 + 1.99 * u(rng), Belief::two_state(u(rng)));
            EXPECT_LE(intervention_value(pr, 11, v1.view(), 0.0, x).value,
                      intervention_value(pr, 11, v2.view(), 0.0, x).value);
        }
    }
}

TEST(InterventionValue, NonincreasingInBaseFee) {
    Problem cheap = informative_problem(), dear = informative_problem();
    dear.cost = CostModel(0.05, 0.05);
    const GridAxes a = unit_axes(41, 4.0, 21);
    const Slice v(a, [](double w, double p) { return std::sqrt(w) * (1.0 + (p - 0.5) * (p - 0.5)); });
    for (double w : {0.06, 0.5, 1.0, 3.0})
        for (double p : {0.1, 0.5, 0.8}) {
            const State x(w, Belief::two_state(p));
            EXPECT_LE(intervention_value(dear, 11, v.view(), 0.0, x).value,
                      intervention_value(cheap, 11, v.view(), 0.0, x).value);
        }
}

TEST(SupersolutionBound, TerminalOrderingAndObstacleGap) {
    const Problem pr = informative_problem();
    const auto b = SupersolutionBound::for_model(pr.model, 1.05);
    EXPECT_NO_THROW(b.validate(pr.model));
    EXPECT_EQ(b.beta, pr.model.alpha);
    EXPECT_EQ(b.A, 0.0);
    const PowerUtility u = pr.utility();
    for (double w : {0.0, 0.3, 1.0, 3.9}) {
        EXPECT_DOUBLE_EQ(psi_bound(b, 1.0, w), std::pow(w, 0.5) / 0.5);
        EXPECT_GE(psi_bound(b, 1.0, w), u(w));
    }
    const GridAxes a = unit_axes(401, 4.0, 11);
    for (double t : {0.0, 0.5, 0.9}) {
        const Slice v(a, [&](double w, double) { return psi_bound(b, t, w); });
        for (double w : {0.02, 0.4, 1.0, 2.5})
            for (double p : {0.2, 0.5}) {
                const double m = intervention_value(pr, 21, v.view(), t, State(w, Belief::two_state(p))).value;
                const double floor = std::pow(w, 0.5) - std::pow(w - 0.01, 0.5);
                EXPECT_GE(psi_bound(b, t, w) - m, floor);
                EXPECT_GT(floor, 0.0);
            }
    }
    SupersolutionBound weak = b;
    weak.C = 0.5 * (1.0 - weak.beta) * pr.model.pi_max() * pr.model.mu_max();
    EXPECT_THROW(weak.validate(pr.model), std::invalid_argument);
}

TEST(Solver, CflViolationBeforeStepping) {
    GridSpec g = small_grid();
    g.time_substeps = 1;
    EXPECT_THROW((void)solve_hjbqvi(informative_problem(), g, SolverSettings{}), CflViolation);
}

TEST(Solver, MertonDegenerateSmallGrid) {
    const Problem pr = merton_problem();
    const Solution sol = solve_hjbqvi(pr, small_grid(), SolverSettings{});
    const double rate = merton_rate(0.1, 0.25, 0.5, 0.0, 2.0);
    EXPECT_NEAR(rate, 0.06875, 1e-9);
    const GridAxes& a = sol.axes;
    const PowerUtility u = pr.utility();
    for (int i = 0; i < a.w.n; ++i)
        for (int j = 0; j < a.p.n; ++j) {
            EXPECT_EQ(sol.value.at(a.t.n - 1, i, j), u(a.w.node(i)));
            const double w = a.w.node(i);
            if (w < 0.8 || w > 3.2) continue;
            for (int k = 0; k < a.t.n; k += 10) {
                const double exact = merton_value(rate, 0.5, 1.0, a.t.node(k), w);
                EXPECT_NEAR(sol.value.at(k, i, j) / exact, 1.0, 0.01) << k << ' ' << i << ' ' << j;
            }
        }
    const SolverSettings s;
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_GT(sol.value.data()[n] - sol.m_value.data()[n], s.region_tol);
}

TEST(Solver, RegimeSwapMirrorsBelief) {
    const Solution a = solve_hjbqvi(two_regime(0.4, -0.2), small_grid(), SolverSettings{});
    const Solution b = solve_hjbqvi(two_regime(-0.2, 0.4), small_grid(), SolverSettings{});
    const GridAxes& g = a.axes;
    double worst = 0.0;
    for (int k = 0; k < g.t.n; ++k)
        for (int i = 0; i < g.w.n; ++i)
            for (int j = 0; j < g.p.n; ++j)
                worst = std::max(worst, std::abs(a.value.at(k, i, j) - b.value.at(k, i, g.p.n - 1 - j)));
    EXPECT_LT(worst, 1e-9);
}

TEST(Solver, BoundedBySupersolutionAndAboveObstacle) {
    const Problem pr = informative_problem();
    SolverSettings s;
    const Solution sol = solve_hjbqvi(pr, small_grid(), s);
    const auto b = SupersolutionBound::for_model(pr.model, s.psi_c_factor);
    const GridAxes& a = sol.axes;
    for (int k = 0; k < a.t.n; ++k)
        for (int i = 0; i < a.w.n; ++i)
            for (int j = 0; j < a.p.n; ++j) {
                EXPECT_LE(sol.value.at(k, i, j), psi_bound(b, a.t.node(k), a.w.node(i)));
                EXPECT_GE(sol.value.at(k, i, j) - sol.m_value.at(k, i, j), -s.obstacle_tol);
                EXPECT_EQ(sol.value.at(k, 0, j), 0.0);
            }
}

TEST(Solver, ThreadCountDoesNotChangeResult) {
    const Problem pr = informative_problem();
    SolverSettings one, three;
    three.threads = 3;
    const Solution a = solve_hjbqvi(pr, small_grid(), one);
    const Solution b = solve_hjbqvi(pr, small_grid(), three);
    EXPECT_EQ(a.value.data(), b.value.data());
    EXPECT_EQ(a.m_value.data(), b.m_value.data());
    EXPECT_EQ(a.pi_star.data(), b.pi_star.data());
    EXPECT_EQ(a.diag.total_sweeps, b.diag.total_sweeps);
}
