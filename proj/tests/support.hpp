#pragma once

// Model fixtures shared by the unit and acceptance tests.

#include "mexp/config.hpp"
#include "mexp/model.hpp"
#include "mexp/solver.hpp"

#include <cmath>
#include <string>

namespace mexp::testing {

inline Problem two_regime(double mu1, double mu2, double noise_sd = 0.1, int n_quad = 16) {
    Problem pr;
    ModelParams& m = pr.model;
    m.mu.resize(2);
    m.mu << mu1, mu2;
    m.sigma = 0.25;
    m.Q.resize(2, 2);
    m.Q << -1, 1, 1, -1;
    m.T = 1.0;
    m.alpha = 0.5;
    m.pi_lo = 0.0;
    m.pi_hi = 2.0;
    m.p0.resize(2);
    m.p0 << 0.5, 0.5;
    pr.cost = CostModel(0.01, 0.05);
    pr.noise = NoiseModel(noise_sd, n_quad);
    return pr;
}

inline Problem merton_problem() { return two_regime(0.1, 0.1); }
inline Problem informative_problem() { return two_regime(0.4, -0.2); }

/// Best constant-fraction growth rate (1-alpha)(pi mu - alpha pi^2 sigma^2/2)
/// over [pi_lo, pi_hi], by dense scan.
inline double merton_rate(double mu, double sigma, double alpha, double pi_lo, double pi_hi) {
    double best = -1e300;
    const int n = 200000;
    for (int i = 0; i <= n; ++i) {
        const double pi = pi_lo + (pi_hi - pi_lo) * i / n;
        best = std::max(best, (1 - alpha) * (pi * mu - 0.5 * alpha * pi * pi * sigma * sigma));
    }
    return best;
}

inline double merton_value(double rate, double alpha, double T, double t, double w) {
    return std::pow(w, 1 - alpha) / (1 - alpha) * std::exp(rate * (T - t));
}

inline GridSpec small_grid() {
    GridSpec g;
    g.n_t = 51;
    g.time_substeps = 4;
    g.n_w = 26;
    g.w_max = 4.0;
    g.n_p = 13;
    g.n_q = 11;
    return g;
}

inline std::string ini(const std::string& mu, const std::string& grid, const std::string& extra = "") {
    return "[model]\nmu = " + mu +
           "\nsigma = 0.25\nQ = [[-1, 1], [1, -1]]\nT = 1\nalpha = 0.5\npi_lo = 0\npi_hi = 2\np0 = [0.5, 0.5]\n"
           "[cost]\nk0 = 0.01\nk1 = 0.05\n[noise]\nstd_dev = 0.1\n" +
           grid + extra;
}

inline const char* kSmallGrid = "[grid]\nn_t = 51\ntime_substeps = 4\nn_w = 26\nw_max = 4\nn_p = 13\nn_q = 11\n";

}  // namespace mexp::testing
