#include "mexp/montecarlo.hpp"

#include "mexp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace mexp {

namespace {

// Neumaier-compensated running sum.
class Sum {
public:
    void add(double x) {
        const double t = s_ + x;
        c_ += std::abs(s_) >= std::abs(x) ? (s_ - t) + x : (x - t) + s_;
        s_ = t;
    }
    [[nodiscard]] double value() const { return s_ + c_; }

private:
    double s_ = 0.0, c_ = 0.0;
};

struct MeanSe {
    double mean, se;
};

template <class F>
MeanSe mean_se(std::size_t n, F&& at) {
    Sum s;
    for (std::size_t i = 0; i < n; ++i) s.add(at(i));
    const double mean = s.value() / static_cast<double>(n);
    Sum v;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = at(i) - mean;
        v.add(d * d);
    }
    const double var = n > 1 ? v.value() / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

int decile(double x) { return std::clamp(static_cast<int>(std::floor(x * 10.0)), 0, 9); }

}  // namespace

Strategy policy_strategy(const Policy& policy) {
    Strategy s;
    s.name = "policy";
    s.trade = [&policy](double t, const State& x) { return policy_at(policy, t, x).pi; };
    s.purchase = [&policy](double t, const State& x, int) { return policy_at(policy, t, x).q; };
    return s;
}

Strategy myopic_strategy(const Problem& pr) {
    const ModelParams m = pr.model;
    Strategy s;
    s.name = "myopic";
    s.trade = [m](double, const State& x) {
        return std::clamp(m.mu.dot(x.p.probs()) / (m.alpha * m.sigma * m.sigma), m.pi_lo, m.pi_hi);
    };
    s.purchase = [](double, const State&, int) { return std::optional<double>(); };
    return s;
}

Strategy constant_strategy(double pi) {
    Strategy s;
    s.name = "constant";
    s.trade = [pi](double, const State&) { return pi; };
    s.purchase = [](double, const State&, int) { return std::optional<double>(); };
    return s;
}

StrategyEstimate evaluate_strategy(const Problem& pr, const Strategy& s, const State& x0, long long n_paths,
                                   const PathConfig& cfg, const RunOptions& opt) {
    if (n_paths < 2) throw std::invalid_argument("mc.n_paths: need at least 2 paths");
    PathConfig run = cfg;
    run.record_stride = cfg.n_steps;  // endpoints only
    const PowerUtility u = pr.utility();
    const long long cap = static_cast<long long>(std::floor(x0.w / pr.cost.k_min()));

    std::vector<PathOutcome> out(static_cast<std::size_t>(n_paths));
    parallel_for(out.size(), opt.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const PathRecord rec = simulate_innovations_state(pr, x0, s.trade, s.purchase, run, i);
            PathOutcome& o = out[i];
            o.terminal_wealth = rec.terminal.w;
            o.utility = u(std::max(rec.terminal.w, 0.0));
            o.purchases = static_cast<int>(rec.purchases.size());
            o.clamped = rec.exposure_clamped;
            o.terminal = rec.terminal;
            bool ok = rec.terminal.w >= 0.0 && o.purchases <= cap;
            for (double w : rec.wealth) ok = ok && w >= 0.0;
            for (const auto& ev : rec.purchases) {
                const auto chi = pr.cost.chi(ev.t, ev.w_before);
                ok = ok && chi && ev.q >= 0.0 && ev.q <= *chi && ev.w_after >= 0.0;
            }
            o.structural_ok = ok;
            o.events = rec.purchases;
        }
    });

    StrategyEstimate est;
    est.name = s.name;
    est.n_paths = n_paths;
    const auto ms = mean_se(out.size(), [&](std::size_t i) { return out[i].utility; });
    est.mean = ms.mean;
    est.std_error = ms.se;
    Sum quality;
    for (const auto& o : out) {
        est.clamped_paths += o.clamped;
        est.structural_violations += !o.structural_ok;
        est.total_purchases += o.purchases;
        est.max_purchases = std::max(est.max_purchases, o.purchases);
        if (static_cast<int>(est.count_histogram.size()) <= o.purchases) est.count_histogram.resize(o.purchases + 1, 0);
        ++est.count_histogram[o.purchases];
        for (const auto& ev : o.events) {
            quality.add(ev.q);
            ++est.quality_histogram[decile(ev.q)];
            ++est.timing_histogram[decile(ev.t / pr.model.T)];
        }
    }
    est.mean_quality = est.total_purchases > 0 ? quality.value() / static_cast<double>(est.total_purchases) : 0.0;
    est.clamp_warning = static_cast<double>(est.clamped_paths) > 1e-3 * static_cast<double>(n_paths);
    if (opt.keep_paths) est.paths = std::move(out);
    return est;
}

PairedComparison paired_dominance(const StrategyEstimate& a, const StrategyEstimate& b) {
    if (a.paths.size() != b.paths.size() || a.paths.empty())
        throw std::invalid_argument("paired comparison needs two estimates over the same kept paths");
    const auto ms = mean_se(a.paths.size(), [&](std::size_t i) { return a.paths[i].utility - b.paths[i].utility; });
    return {ms.mean, ms.se, ms.mean >= -3.0 * ms.se};
}

double value_at(const Problem& pr, const NodeField& value, double t, const State& x) {
    const GridAxes& a = value.axes();
    if (t >= a.t.hi) return pr.utility()(x.w);
    const double w_max = a.w.hi;
    if (x.w <= w_max) return value.trilinear(t, x.w, x.p[0]);
    return value.trilinear(t, w_max, x.p[0]) * std::pow(x.w / w_max, 1.0 - pr.model.alpha);
}

double discretization_scale(const GridAxes& axes) {
    const double dw = axes.w.step(), dp = axes.p.step();
    return axes.t.step() + dw * dw + dp * dp;
}

MartingaleReport martingale_diagnostic(const Problem& pr, const NodeField& value, const StrategyEstimate& est,
                                       const State& x0, double allowance_c) {
    if (est.paths.empty()) throw std::invalid_argument("martingale diagnostic needs kept paths");
    const double T = pr.model.T;
    std::vector<double> totals(est.paths.size());
    std::map<int, std::vector<double>> by_ordinal;
    long long segments = 0;

    for (std::size_t i = 0; i < est.paths.size(); ++i) {
        const auto& o = est.paths[i];
        double t0 = 0.0;
        State start = x0;
        double total = 0.0;
        int ordinal = 0;
        auto close = [&](double t1, const State& end) {
            if (t1 > t0) {
                const double inc = value_at(pr, value, t1, end) - value_at(pr, value, t0, start);
                total += inc;
                by_ordinal[ordinal].push_back(inc);
                ++ordinal;
                ++segments;
            }
        };
        std::size_t e = 0;
        while (e < o.events.size()) {
            const int step = o.events[e].step;
            const auto& first = o.events[e];
            close(first.t, State(first.w_before, Belief::project(Eigen::Map<const Eigen::VectorXd>(
                                                     first.p_before.data(), static_cast<Eigen::Index>(first.p_before.size())))));
            while (e + 1 < o.events.size() && o.events[e + 1].step == step) ++e;
            const auto& last = o.events[e];
            t0 = last.t;
            start = State(last.w_after, Belief::project(Eigen::Map<const Eigen::VectorXd>(
                                            last.p_after.data(), static_cast<Eigen::Index>(last.p_after.size()))));
            ++e;
        }
        close(T, o.terminal);
        totals[i] = total;
    }

    MartingaleReport rep;
    rep.n_paths = static_cast<long long>(totals.size());
    rep.n_segments = segments;
    const auto ms = mean_se(totals.size(), [&](std::size_t i) { return totals[i]; });
    rep.mean_path_increment = ms.mean;
    rep.std_error = ms.se;
    rep.allowance = allowance_c * discretization_scale(value.axes());
    rep.pass = std::abs(ms.mean) < 3.0 * ms.se + rep.allowance;
    for (const auto& [ord, incs] : by_ordinal) {
        const auto s = mean_se(incs.size(), [&](std::size_t i) { return incs[i]; });
        rep.by_segment.push_back({ord, static_cast<long long>(incs.size()), s.mean, incs.size() > 1 ? s.se : 0.0});
    }
    return rep;
}

MartingaleReport martingale_diagnostic(const Problem& pr, const NodeField& value, const Strategy& s, const State& x0,
                                       long long n_paths, const PathConfig& cfg, double allowance_c,
                                       const RunOptions& opt) {
    RunOptions keep = opt;
    keep.keep_paths = true;
    const StrategyEstimate est = evaluate_strategy(pr, s, x0, n_paths, cfg, keep);
    return martingale_diagnostic(pr, value, est, x0, allowance_c);
}

PdeMcVerdict compare_pde_mc(const NodeField& value, const StrategyEstimate& est, double t0, const State& x0,
                            double allowance_c) {
    PdeMcVerdict v;
    v.v_grid = value.trilinear(t0, x0.w, x0.p[0]);
    v.mc_mean = est.mean;
    v.std_error = est.std_error;
    v.gap = std::abs(v.v_grid - v.mc_mean);
    v.allowance = allowance_c * discretization_scale(value.axes());
    v.pass = v.gap <= 3.0 * v.std_error + v.allowance;
    return v;
}

nlohmann::json to_json(const StrategyEstimate& e) {
    return {{"strategy", e.name},
            {"n_paths", e.n_paths},
            {"mean_utility", e.mean},
            {"std_error", e.std_error},
            {"clamped_paths", e.clamped_paths},
            {"clamp_warning", e.clamp_warning},
            {"structural_violations", e.structural_violations},
            {"total_purchases", e.total_purchases},
            {"max_purchases_per_path", e.max_purchases},
            {"mean_quality", e.mean_quality},
            {"purchase_count_histogram", e.count_histogram},
            {"quality_decile_histogram", e.quality_histogram},
            {"timing_decile_histogram", e.timing_histogram}};
}

nlohmann::json to_json(const PairedComparison& c) {
    return {{"mean_difference", c.mean_difference}, {"std_error", c.std_error}, {"pass", c.pass}};
}

nlohmann::json to_json(const MartingaleReport& r) {
    nlohmann::json seg = nlohmann::json::array();
    for (const auto& s : r.by_segment)
        seg.push_back({{"segment", s.ordinal}, {"count", s.count}, {"mean", s.mean}, {"std_error", s.std_error}});
    return {{"n_paths", r.n_paths},
            {"n_segments", r.n_segments},
            {"mean_path_increment", r.mean_path_increment},
            {"std_error", r.std_error},
            {"allowance", r.allowance},
            {"pass", r.pass},
            {"segments", seg}};
}

nlohmann::json to_json(const PdeMcVerdict& v) {
    return {{"v_grid", v.v_grid},       {"mc_mean", v.mc_mean},     {"std_error", v.std_error},
            {"gap", v.gap},             {"allowance", v.allowance}, {"pass", v.pass}};
}

void write_outcomes_csv(std::ostream& out, const StrategyEstimate& e) {
    out << "path,terminal_wealth,utility,purchases,clamped\n" << std::setprecision(17);
    for (std::size_t i = 0; i < e.paths.size(); ++i) {
        const auto& o = e.paths[i];
        out << i << ',' << o.terminal_wealth << ',' << o.utility << ',' << o.purchases << ',' << o.clamped << '\n';
    }
}

void write_events_csv(std::ostream& out, const StrategyEstimate& e) {
    out << "path,t,step,batch,q,z,w_before,w_after,p1_before,p1_after\n" << std::setprecision(17);
    for (std::size_t i = 0; i < e.paths.size(); ++i)
        for (const auto& ev : e.paths[i].events)
            out << i << ',' << ev.t << ',' << ev.step << ',' << ev.batch_index << ',' << ev.q << ',' << ev.z << ','
                << ev.w_before << ',' << ev.w_after << ',' << ev.p_before.front() << ',' << ev.p_after.front() << '\n';
}

}  // namespace mexp
