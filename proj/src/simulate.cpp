#include "mexp/simulate.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace mexp {

PathConfig PathConfig::for_horizon(double T, double dt, std::uint64_t seed, int record_stride) {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("mc.dt: must be positive");
    PathConfig c;
    c.n_steps = std::max(1, static_cast<int>(std::lround(T / dt)));
    c.dt = T / c.n_steps;
    c.seed = seed;
    c.record_stride = record_stride;
    return c;
}

void PathConfig::validate(double T) const {
    if (!(dt > 0.0)) throw std::invalid_argument("mc.dt: must be positive");
    if (n_steps < 1) throw std::invalid_argument("mc.dt: need at least one step");
    if (std::abs(n_steps * dt - T) > dt) throw std::invalid_argument("mc.dt: n_steps*dt must equal T within one step");
    if (record_stride < 1) throw std::invalid_argument("mc.record_stride: must be >= 1");
}

namespace {

int draw_categorical(const Eigen::VectorXd& probs, PhiloxEngine& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) * probs.sum();
    double acc = 0.0;
    for (Eigen::Index n = 0; n < probs.size(); ++n) {
        acc += probs(n);
        if (u < acc) return static_cast<int>(n);
    }
    for (Eigen::Index n = probs.size() - 1; n >= 0; --n)
        if (probs(n) > 0.0) return static_cast<int>(n);
    return 0;
}

std::vector<double> to_std(const Belief& p) { return {p.probs().data(), p.probs().data() + p.size()}; }

}  // namespace

std::vector<int> simulate_chain(const ModelParams& m, double dt, int n_steps, PhiloxEngine& rng) {
    std::vector<int> path(static_cast<std::size_t>(n_steps) + 1);
    int y = draw_categorical(m.p0, rng);
    const double horizon = dt * n_steps;
    double clock = 0.0;
    int k = 0;
    std::exponential_distribution<double> expo(1.0);
    for (;;) {
        const double rate = -m.Q(y, y);
        const double next = rate > 0.0 ? clock + expo(rng) / rate : std::numeric_limits<double>::infinity();
        while (k <= n_steps && k * dt < next) path[k++] = y;
        if (k > n_steps || next > horizon) {
            while (k <= n_steps) path[k++] = y;
            break;
        }
        Eigen::VectorXd jump = m.Q.row(y).transpose();
        jump(y) = 0.0;
        y = draw_categorical(jump, rng);
        clock = next;
    }
    return path;
}

PathRecord simulate_innovations_state(const Problem& pr, const State& x0, const TradeRule& trade,
                                      const PurchaseRule& purchase, const PathConfig& cfg, std::uint64_t path) {
    const auto& m = pr.model;
    cfg.validate(m.T);
    auto chain_rng = make_stream(cfg.seed, path, Stream::kChain);
    auto bm_rng = make_stream(cfg.seed, path, Stream::kBrownian);
    auto op_rng = make_stream(cfg.seed, path, Stream::kOpinion);
    const std::vector<int> chain = simulate_chain(m, cfg.dt, cfg.n_steps, chain_rng);
    std::normal_distribution<double> normal(0.0, 1.0);

    PathRecord rec;
    rec.n_regimes = m.n_regimes();
    rec.initial = x0;
    State x = x0;
    const double sqdt = std::sqrt(cfg.dt);
    const long long purchase_cap = static_cast<long long>(std::floor(x0.w / pr.cost.k_min())) + 1;
    double acc_r = 0.0, acc_i = 0.0;

    auto record = [&](int k) {
        rec.t.push_back(k == cfg.n_steps ? m.T : k * cfg.dt);
        rec.regime.push_back(chain[k]);
        rec.log_return.push_back(acc_r);
        rec.innovation.push_back(acc_i);
        rec.wealth.push_back(x.w);
        for (Eigen::Index n = 0; n < x.p.size(); ++n) rec.belief.push_back(x.p[n]);
        acc_r = acc_i = 0.0;
    };

    for (int k = 0; k < cfg.n_steps; ++k) {
        const double t = k * cfg.dt;
        const int y = chain[k];
        for (int batch = 0;; ++batch) {
            const auto q = purchase(t, x, batch);
            if (!q) break;
            const auto chi = pr.cost.chi(t, x.w);
            if (!chi || *q < 0.0 || *q > *chi) {
                std::ostringstream os;
                os << "purchase rule asked for q=" << *q << " at t=" << t << " w=" << x.w << " outside [0, chi]";
                throw InfeasiblePurchase(os.str());
            }
            if (static_cast<long long>(rec.purchases.size()) >= purchase_cap)
                throw std::logic_error("purchase count exceeds floor(w0/k0)");
            PurchaseEvent ev;
            ev.step = k;
            ev.t = t;
            ev.batch_index = batch;
            ev.q = *q;
            ev.z = sample_opinion(pr, *q, y, op_rng);
            ev.w_before = x.w;
            ev.p_before = to_std(x.p);
            x = jump_map(pr, ev.z, t, x, *q);
            ev.w_after = x.w;
            ev.p_after = to_std(x.p);
            rec.purchases.push_back(std::move(ev));
        }
        if (k % cfg.record_stride == 0) record(k);

        const double pi = std::clamp(trade(t, x), m.pi_lo, m.pi_hi);
        const double db = sqdt * normal(bm_rng);
        const double mu_y = m.mu(y);
        const double mean = m.mu.dot(x.p.probs());
        const double dr = (mu_y - 0.5 * m.sigma * m.sigma) * cfg.dt + m.sigma * db;
        const double di = db + (mu_y - mean) * cfg.dt / m.sigma;
        acc_r += dr;
        acc_i += di;

        double growth = 1.0 + pi * (mean * cfg.dt + m.sigma * di);
        if (growth < 0.0) {
            growth = 0.0;
            rec.exposure_clamped = true;
        }
        const double w_next = x.w * growth;
        Eigen::VectorXd p_next = x.p.probs() + belief_drift(m, x.p) * cfg.dt + belief_diffusion(m, x.p) * di;
        x = State(w_next, Belief::project(std::move(p_next)));
    }
    record(cfg.n_steps);
    rec.terminal = x;
    return rec;
}

std::vector<double> particle_filter_oracle(const Problem& pr, const std::vector<double>& log_returns,
                                           const std::vector<OpinionObservation>& opinions, double dt,
                                           int n_particles, PhiloxEngine& rng) {
    const auto& m = pr.model;
    const int n = m.n_regimes();
    if (n_particles < 1) throw std::invalid_argument("particle filter needs at least one particle");
    const Eigen::MatrixXd P = (m.Q * dt).exp();
    std::vector<Eigen::VectorXd> cdf(n);
    for (int r = 0; r < n; ++r) {
        cdf[r].resize(n);
        double acc = 0.0;
        for (int c = 0; c < n; ++c) cdf[r](c) = acc += std::max(P(r, c), 0.0);
    }

    std::vector<int> part(n_particles), scratch(n_particles);
    for (auto& y : part) y = draw_categorical(m.p0, rng);
    std::vector<double> logw(n_particles), w(n_particles);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto resample = [&] {
        const double mx = *std::max_element(logw.begin(), logw.end());
        double total = 0.0;
        for (int a = 0; a < n_particles; ++a) total += w[a] = std::exp(logw[a] - mx);
        const double step = total / n_particles;
        double u = unif(rng) * step, acc = w[0];
        int src = 0;
        for (int a = 0; a < n_particles; ++a) {
            while (u > acc && src + 1 < n_particles) acc += w[++src];
            scratch[a] = part[src];
            u += step;
        }
        part.swap(scratch);
        std::fill(logw.begin(), logw.end(), 0.0);
    };

    const int n_steps = static_cast<int>(log_returns.size());
    std::vector<double> out(static_cast<std::size_t>(n_steps + 1) * n, 0.0);
    std::size_t next_op = 0;
    const double s2dt = m.sigma * m.sigma * dt;
    for (int k = 0; k <= n_steps; ++k) {
        bool observed = false;
        while (next_op < opinions.size() && opinions[next_op].step == k) {
            const auto& o = opinions[next_op++];
            for (int a = 0; a < n_particles; ++a)
                logw[a] += pr.noise.log_kernel((o.z - o.q * m.mu(part[a])) / (1.0 - o.q));
            observed = true;
        }
        if (observed) resample();
        for (int a = 0; a < n_particles; ++a) out[static_cast<std::size_t>(k) * n + part[a]] += 1.0 / n_particles;
        if (k == n_steps) break;
        for (int a = 0; a < n_particles; ++a) {
            const double mean = (m.mu(part[a]) - 0.5 * m.sigma * m.sigma) * dt;
            const double e = log_returns[k] - mean;
            logw[a] += -0.5 * e * e / s2dt;
        }
        resample();
        for (int a = 0; a < n_particles; ++a) {
            const double u = unif(rng) * cdf[part[a]](n - 1);
            int c = 0;
            while (c + 1 < n && u >= cdf[part[a]](c)) ++c;
            part[a] = c;
        }
    }
    return out;
}

void write_paths_csv(std::ostream& out, const std::vector<PathRecord>& paths, std::uint64_t first_path_id) {
    const int n = paths.empty() ? 0 : paths.front().n_regimes;
    out << "path,t,regime,log_return,innovation,wealth";
    for (int r = 0; r < n; ++r) out << ",p" << r + 1;
    out << '\n' << std::setprecision(17);
    for (std::size_t id = 0; id < paths.size(); ++id) {
        const auto& p = paths[id];
        for (std::size_t r = 0; r < p.size(); ++r) {
            out << first_path_id + id << ',' << p.t[r] << ',' << p.regime[r] << ',' << p.log_return[r] << ','
                << p.innovation[r] << ',' << p.wealth[r];
            for (int c = 0; c < n; ++c) out << ',' << p.belief[r * n + c];
            out << '\n';
        }
    }
}

void write_purchases_csv(std::ostream& out, const std::vector<PathRecord>& paths, std::uint64_t first_path_id) {
    const int n = paths.empty() ? 0 : paths.front().n_regimes;
    out << "path,t,step,batch,q,z,w_before,w_after";
    for (int r = 0; r < n; ++r) out << ",p" << r + 1 << "_before";
    for (int r = 0; r < n; ++r) out << ",p" << r + 1 << "_after";
    out << '\n' << std::setprecision(17);
    for (std::size_t id = 0; id < paths.size(); ++id)
        for (const auto& e : paths[id].purchases) {
            out << first_path_id + id << ',' << e.t << ',' << e.step << ',' << e.batch_index << ',' << e.q << ','
                << e.z << ',' << e.w_before << ',' << e.w_after;
            for (double v : e.p_before) out << ',' << v;
            for (double v : e.p_after) out << ',' << v;
            out << '\n';
        }
}

}  // namespace mexp
