#pragma once

// Forward simulation: hidden regime chain, log-returns, innovations, and the
// controlled (wealth, belief) state with expert-opinion purchases.

#include "mexp/filter.hpp"
#include "mexp/model.hpp"
#include "mexp/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mexp {

struct PathConfig {
    double dt = 1e-3;
    int n_steps = 1000;
    std::uint64_t seed = 1;
    int record_stride = 1;  // record every k-th step; the terminal time is always recorded

    /// n_steps = round(T/dt) with dt adjusted so that n_steps*dt = T.
    [[nodiscard]] static PathConfig for_horizon(double T, double dt, std::uint64_t seed, int record_stride);
    void validate(double T) const;
};

struct PurchaseEvent {
    int step = 0;
    double t = 0.0;
    int batch_index = 0;  // position within the same-instant batch
    double q = 0.0;
    double z = 0.0;
    double w_before = 0.0, w_after = 0.0;
    std::vector<double> p_before, p_after;
};

struct PathRecord {
    int n_regimes = 0;
    std::vector<double> t;
    std::vector<int> regime;
    std::vector<double> log_return;  // increment since the previous record
    std::vector<double> innovation;  // increment since the previous record
    std::vector<double> wealth;      // after any purchases at that time
    std::vector<double> belief;      // n_regimes entries per record, after purchases
    std::vector<PurchaseEvent> purchases;
    bool exposure_clamped = false;

    State initial;
    State terminal;

    [[nodiscard]] std::size_t size() const { return t.size(); }
};

/// Trading fraction as a function of (t, state).
using TradeRule = std::function<double(double, const State&)>;
/// Quality to buy at (t, state, batch index), or nothing.
using PurchaseRule = std::function<std::optional<double>(double, const State&, int)>;

/// Regime at each grid time k*dt, k = 0..n_steps, from exact exponential
/// holding times; the initial regime is drawn from p0.
[[nodiscard]] std::vector<int> simulate_chain(const ModelParams& m, double dt, int n_steps, PhiloxEngine& rng);

/// One controlled path from (0, x0). Randomness comes from per-path streams
/// (seed, path) so the result does not depend on the calling thread.
/// Throws InfeasiblePurchase if the rule asks for q outside [0, chi].
[[nodiscard]] PathRecord simulate_innovations_state(const Problem& pr, const State& x0, const TradeRule& trade,
                                                    const PurchaseRule& purchase, const PathConfig& cfg,
                                                    std::uint64_t path);

struct OpinionObservation {
    int step;
    double q;
    double z;
};

/// Bootstrap particle filter for the hidden chain given per-step log-returns
/// (Y held at the left point of each step) and opinions observed at step
/// starts. Returns the regime frequencies at each step start after that
/// step's opinions, n_regimes entries per step.
[[nodiscard]] std::vector<double> particle_filter_oracle(const Problem& pr, const std::vector<double>& log_returns,
                                                         const std::vector<OpinionObservation>& opinions, double dt,
                                                         int n_particles, PhiloxEngine& rng);

void write_paths_csv(std::ostream& out, const std::vector<PathRecord>& paths, std::uint64_t first_path_id = 0);
void write_purchases_csv(std::ostream& out, const std::vector<PathRecord>& paths, std::uint64_t first_path_id = 0);

}  // namespace mexp
