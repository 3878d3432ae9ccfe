#pragma once

// Monte-Carlo evaluation of feedback strategies, the martingale diagnostic
// for the value process, and PDE-vs-simulation comparison.

#include "mexp/grid.hpp"
#include "mexp/policy.hpp"
#include "mexp/simulate.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mexp {

struct Strategy {
    std::string name;
    TradeRule trade;
    PurchaseRule purchase;
};

/// Trades and buys according to policy_at.
[[nodiscard]] Strategy policy_strategy(const Policy& policy);
/// Myopic filtered Merton fraction clamp(mu^T p / (alpha sigma^2)), never buys.
[[nodiscard]] Strategy myopic_strategy(const Problem& pr);
/// Constant fraction, never buys.
[[nodiscard]] Strategy constant_strategy(double pi);

struct PathOutcome {
    double terminal_wealth = 0.0;
    double utility = 0.0;
    int purchases = 0;
    bool clamped = false;
    bool structural_ok = true;  // wealth >= 0, purchases <= floor(w0/k0), q <= chi
    State terminal;
    std::vector<PurchaseEvent> events;
};

struct StrategyEstimate {
    std::string name;
    long long n_paths = 0;
    double mean = 0.0;
    double std_error = 0.0;
    long long clamped_paths = 0;
    bool clamp_warning = false;  // more than 0.1% of paths clamped
    long long structural_violations = 0;
    long long total_purchases = 0;
    int max_purchases = 0;
    double mean_quality = 0.0;
    std::vector<long long> count_histogram;       // paths by number of purchases
    std::array<long long, 10> quality_histogram{};  // deciles of q
    std::array<long long, 10> timing_histogram{};   // deciles of t/T
    std::vector<PathOutcome> paths;
};

struct RunOptions {
    int threads = 1;
    bool keep_paths = true;
};

/// Mean utility of U(W_T) over n_paths paths from (0, x0); path i uses
/// streams (cfg.seed, i) so any two strategies share the chain and Brownian
/// draws. Reduction is serial in path order with compensated summation.
[[nodiscard]] StrategyEstimate evaluate_strategy(const Problem& pr, const Strategy& s, const State& x0,
                                                 long long n_paths, const PathConfig& cfg, const RunOptions& opt);

struct PairedComparison {
    double mean_difference = 0.0;  // first minus second
    double std_error = 0.0;
    bool pass = false;             // mean_difference >= -3 SE
};

/// Paired differences of per-path utilities (both estimates must keep paths).
[[nodiscard]] PairedComparison paired_dominance(const StrategyEstimate& a, const StrategyEstimate& b);

struct SegmentStat {
    int ordinal;
    long long count;
    double mean;
    double std_error;
};

struct MartingaleReport {
    long long n_paths = 0;
    long long n_segments = 0;
    double mean_path_increment = 0.0;  // per path, sum of segment increments
    double std_error = 0.0;
    double allowance = 0.0;
    bool pass = false;
    std::vector<SegmentStat> by_segment;
};

/// Increments of V(t, X_t) between consecutive purchase batches (and the
/// horizon), V interpolated from `value` and U used at T.
[[nodiscard]] MartingaleReport martingale_diagnostic(const Problem& pr, const NodeField& value, const Strategy& s,
                                                     const State& x0, long long n_paths, const PathConfig& cfg,
                                                     double allowance_c, const RunOptions& opt);
/// Same, from the paths of an existing estimate (which must keep paths).
[[nodiscard]] MartingaleReport martingale_diagnostic(const Problem& pr, const NodeField& value,
                                                     const StrategyEstimate& est, const State& x0, double allowance_c);

/// Trilinear V with the w^(1-alpha) extension above w_max and U at t >= T.
[[nodiscard]] double value_at(const Problem& pr, const NodeField& value, double t, const State& x);

struct PdeMcVerdict {
    double v_grid = 0.0;
    double mc_mean = 0.0;
    double std_error = 0.0;
    double gap = 0.0;
    double allowance = 0.0;
    bool pass = false;
};

/// PASS iff |V(t0,x0) - mean| <= 3 SE + c (dt + dw^2 + dp^2).
[[nodiscard]] PdeMcVerdict compare_pde_mc(const NodeField& value, const StrategyEstimate& est, double t0,
                                          const State& x0, double allowance_c);

/// Grid discretization scale dt + dw^2 + dp^2.
[[nodiscard]] double discretization_scale(const GridAxes& axes);

[[nodiscard]] nlohmann::json to_json(const StrategyEstimate& e);
[[nodiscard]] nlohmann::json to_json(const PairedComparison& c);
[[nodiscard]] nlohmann::json to_json(const MartingaleReport& r);
[[nodiscard]] nlohmann::json to_json(const PdeMcVerdict& v);

void write_outcomes_csv(std::ostream& out, const StrategyEstimate& e);
void write_events_csv(std::ostream& out, const StrategyEstimate& e);

}  // namespace mexp
