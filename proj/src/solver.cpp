#include "mexp/solver.hpp"

#include "mexp/parallel.hpp"
#include "scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mexp {

GridAxes GridSpec::axes(double T) const {
    if (n_t < 2) throw std::invalid_argument("grid.n_t: need at least 2 time levels");
    if (time_substeps < 1) throw std::invalid_argument("grid.time_substeps: must be >= 1");
    if (n_w < 3) throw std::invalid_argument("grid.n_w: need at least 3 wealth nodes");
    if (n_p < 3) throw std::invalid_argument("grid.n_p: need at least 3 belief nodes");
    if (n_q < 1) throw std::invalid_argument("grid.n_q: must be >= 1");
    if (!(w_max > 0.0)) throw std::invalid_argument("grid.w_max: must be positive");
    return GridAxes{Axis{0.0, T, n_t}, Axis{0.0, w_max, n_w}, Axis{0.0, 1.0, n_p}};
}

SupersolutionBound SupersolutionBound::for_model(const ModelParams& m, double c_factor) {
    SupersolutionBound b;
    b.beta = m.alpha;
    b.A = 0.0;
    b.T = m.T;
    const double floor_c = (1.0 - b.beta) * m.pi_max() * m.mu_max();
    b.C = floor_c > 0.0 ? c_factor * floor_c : c_factor - 1.0;
    if (!(b.C > 0.0)) b.C = 1e-3;
    return b;
}

void SupersolutionBound::validate(const ModelParams& m) const {
    if (!(beta > 0.0 && beta <= m.alpha)) throw std::invalid_argument("psi: beta must lie in (0, alpha]");
    if (!(A >= 0.0)) throw std::invalid_argument("psi: A must be non-negative");
    if (!(C > 0.0 && C > (1.0 - beta) * m.pi_max() * m.mu_max()))
        throw std::invalid_argument("psi: C must exceed (1-beta) pi_max mu_max");
    // sup_w [U(w) - w^(1-beta)/(1-beta)] is attained at w = 1
    const double need = 1.0 / (1.0 - m.alpha) - 1.0 / (1.0 - beta);
    if (A < need - 1e-15) throw std::invalid_argument("psi: A too small for psi(T,.) >= U");
}

double psi_bound(const SupersolutionBound& b, double t, double w) {
    return (b.A + std::pow(w, 1.0 - b.beta) / (1.0 - b.beta)) * std::exp(b.C * (b.T - t));
}

double hamiltonian(const ModelParams& m, const State& x, double pi, const Eigen::VectorXd& grad,
                   const Eigen::MatrixXd& hess) {
    const int n = m.n_regimes();
    Eigen::VectorXd f(1 + n), s(1 + n);
    f(0) = pi * x.w * m.mu.dot(x.p.probs());
    f.tail(n) = belief_drift(m, x.p);
    s(0) = pi * x.w * m.sigma;
    s.tail(n) = belief_diffusion(m, x.p);
    return f.dot(grad) + 0.5 * s.dot(hess * s);
}

HamiltonianArgmax maximize_hamiltonian(const ModelParams& m, const State& x, const Eigen::VectorXd& grad,
                                       const Eigen::MatrixXd& hess) {
    const int n = m.n_regimes();
    const Eigen::VectorXd sp = belief_diffusion(m, x.p);
    const double a = x.w * m.mu.dot(x.p.probs()) * grad(0) + x.w * m.sigma * sp.dot(hess.row(0).segment(1, n).transpose());
    const double b = 0.5 * x.w * x.w * m.sigma * m.sigma * hess(0, 0);
    const double h0 = hamiltonian(m, x, 0.0, grad, hess);

    HamiltonianArgmax best{0.0, h0};
    auto consider = [&](double pi) {
        const double v = h0 + a * pi + b * pi * pi;
        if (v > best.value || (v == best.value && std::abs(pi) < std::abs(best.pi))) best = {pi, v};
    };
    // 0 is feasible by the model invariants and is tried first
    best.value = h0;
    consider(m.pi_lo);
    consider(m.pi_hi);
    if (b < 0.0) consider(std::clamp(-a / (2.0 * b), m.pi_lo, m.pi_hi));
    return best;
}

InterventionValue intervention_value(const Problem& pr, int n_q, const SliceView& v, double t, const State& x) {
    if (x.p.size() != 2) throw std::invalid_argument("intervention_value: grid solver supports two regimes");
    const auto chi = pr.cost.chi(t, x.w);
    if (!chi) return {-1.0, std::nullopt};
    InterventionValue best{-std::numeric_limits<double>::infinity(), std::nullopt};
    const auto& nodes = pr.noise.nodes();
    const auto& weights = pr.noise.weights();
    for (int l = 0; l < n_q; ++l) {
        const double q = n_q == 1 ? 0.0 : *chi * l / (n_q - 1);
        const double w_after = std::max(0.0, x.w - pr.cost.cost(t, q));
        double acc = 0.0;
        for (int n = 0; n < 2; ++n) {
            if (x.p[n] == 0.0) continue;
            double inner = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                const double z = q * pr.model.mu(n) + (1.0 - q) * nodes[j];
                const Belief post = bayes_update(pr, z, x.p, q);
                inner += weights[j] * v.bilinear(w_after, post[0]);
            }
            acc += x.p[n] * inner;
        }
        if (acc > best.value) best = {acc, q};
    }
    return best;
}

double explicit_step_bound(const Problem& pr, const GridSpec& grid, const SolverSettings& settings) {
    const GridAxes axes = grid.axes(pr.model.T);
    const detail::Continuation op(pr, axes, settings);
    double worst = 0.0;
    for (int i = 1; i < axes.w.n; ++i)
        for (int j = 0; j < axes.p.n; ++j) worst = std::max(worst, op.coefficient_bound(i, j));
    return worst > 0.0 ? 1.0 / worst : std::numeric_limits<double>::infinity();
}

namespace {

void check_finite(std::span<const double> v, const GridAxes& axes, int k) {
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        if (!std::isfinite(v[idx])) {
            const int i = static_cast<int>(idx / axes.p.n);
            const int j = static_cast<int>(idx % axes.p.n);
            std::ostringstream os;
            os << "non-finite value at node (k=" << k << ", i=" << i << ", j=" << j << ") t=" << axes.t.node(k)
               << " w=" << axes.w.node(i) << " p=" << axes.p.node(j);
            throw SolverError(os.str());
        }
    }
}

struct StepCounts {
    long long directional = 0, dropped = 0;
};

// Explicit continuation steps over one grid interval, in place on `cur`.
void continuation_interval(const detail::Continuation& op, int substeps, double dt, int threads,
                           std::vector<double>& cur, std::vector<double>& scratch, std::vector<double>* pis,
                           std::vector<StepCounts>* counts) {
    const GridAxes& axes = op.axes();
    const int nw = axes.w.n, np = axes.p.n;
    scratch.resize(cur.size());
    for (int s = 0; s < substeps; ++s) {
        const bool last = s + 1 == substeps;
        parallel_for(static_cast<std::size_t>(nw), threads, [&](std::size_t b, std::size_t e) {
            for (auto i = static_cast<int>(b); i < static_cast<int>(e); ++i) {
                for (int j = 0; j < np; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * np + j;
                    if (i == 0) {
                        scratch[idx] = 0.0;
                        if (last && pis) (*pis)[idx] = 0.0;
                        continue;
                    }
                    const auto r = op.evaluate(cur, i, j);
                    scratch[idx] = cur[idx] + dt * r.value;
                    if (counts) {
                        if (r.mode == detail::StencilMode::kDirectional) ++(*counts)[i].directional;
                        if (r.mode == detail::StencilMode::kDropped) ++(*counts)[i].dropped;
                    }
                    if (last && pis) (*pis)[idx] = r.pi;
                }
            }
        });
        std::swap(cur, scratch);
    }
}

}  // namespace

Solution solve_hjbqvi(const Problem& pr, const GridSpec& grid, const SolverSettings& settings) {
    pr.model.validate();
    if (pr.model.n_regimes() != 2) throw std::invalid_argument("model.mu: the grid solver needs exactly two regimes");
    if (!(settings.obstacle_tol > 0.0)) throw std::invalid_argument("solver.obstacle_tol: must be positive");
    if (!(settings.cfl_safety > 0.0 && settings.cfl_safety <= 1.0))
        throw std::invalid_argument("solver.cfl_safety: must lie in (0,1]");

    const GridAxes axes = grid.axes(pr.model.T);
    const int nw = axes.w.n, np = axes.p.n, nt = axes.t.n;
    const std::size_t ns = axes.slice_size();

    const detail::Continuation op(pr, axes, settings);
    const double dt = grid.dt(pr.model.T);
    double worst = 0.0;
    int wi = 0, wj = 0;
    for (int i = 1; i < nw; ++i)
        for (int j = 0; j < np; ++j) {
            const double c = op.coefficient_bound(i, j);
            if (c > worst) worst = c, wi = i, wj = j;
        }
    if (dt * worst > settings.cfl_safety) {
        std::ostringstream os;
        os << "explicit step dt=" << dt << " violates the stability bound at node (w=" << axes.w.node(wi)
           << ", p=" << axes.p.node(wj) << "): dt*coef=" << dt * worst << " > " << settings.cfl_safety
           << "; need grid.time_substeps >= "
           << static_cast<long long>(std::ceil(grid.time_substeps * dt * worst / settings.cfl_safety));
        throw CflViolation(os.str());
    }

    const detail::InterventionTable table(pr, axes, grid.n_q);
    const int sweep_cap = settings.max_sweeps > 0
                              ? settings.max_sweeps
                              : static_cast<int>(std::ceil(axes.w.hi / pr.cost.k0())) + 1;

    Solution sol{axes, NodeField(axes), NodeField(axes), NodeField(axes), NodeField(axes), {}};
    sol.diag.dt = dt;
    sol.diag.cfl_number = dt * worst;
    sol.diag.sweeps_per_level.assign(nt, 0);

    const PowerUtility u = pr.utility();
    std::vector<double> cur(ns), nxt(ns), pis(ns);
    for (int i = 0; i < nw; ++i)
        for (int j = 0; j < np; ++j) cur[static_cast<std::size_t>(i) * np + j] = u(axes.w.node(i));

    const int threads = std::max(1, settings.threads);

    // Fills M and q* for slice k from the final values in `vals`.
    auto store_intervention = [&](int k, std::span<const double> vals) {
        auto m_out = sol.m_value.slice_mut(k);
        auto q_out = sol.q_star.slice_mut(k);
        parallel_for(static_cast<std::size_t>(nw), threads, [&](std::size_t b, std::size_t e) {
            for (auto i = static_cast<int>(b); i < static_cast<int>(e); ++i)
                for (int j = 0; j < np; ++j) {
                    const auto r = table.evaluate(vals, i, j);
                    const std::size_t idx = static_cast<std::size_t>(i) * np + j;
                    m_out[idx] = r.value;
                    q_out[idx] = r.q;
                }
        });
    };

    // Terminal slice.
    {
        std::copy(cur.begin(), cur.end(), sol.value.slice_mut(nt - 1).begin());
        auto pi_out = sol.pi_star.slice_mut(nt - 1);
        for (int i = 0; i < nw; ++i)
            for (int j = 0; j < np; ++j) pi_out[static_cast<std::size_t>(i) * np + j] = op.evaluate(cur, i, j).pi;
        store_intervention(nt - 1, cur);
    }

    std::vector<StepCounts> counts(nw);
    std::vector<double> tilde(ns), row_m(np), row_q(np);

    for (int k = nt - 2; k >= 0; --k) {
        continuation_interval(op, grid.time_substeps, dt, threads, cur, nxt, &pis, &counts);
        sol.diag.node_steps += static_cast<long long>(grid.time_substeps) * (nw - 1) * np;
        check_finite(cur, axes, k);

        // Obstacle iteration V <- max(V~, M[V]). Purchases only reach rows at
        // or below the current wealth row, so rows are settled in ascending
        // order, each by repeated node-parallel passes over the row.
        tilde = cur;
        auto m_out = sol.m_value.slice_mut(k);
        auto q_out = sol.q_star.slice_mut(k);
        int level_iters = 0;
        for (int i = 0; i < nw; ++i) {
            const std::size_t row = static_cast<std::size_t>(i) * np;
            if (table.top_row(i) < 0) {
                for (int j = 0; j < np; ++j) {
                    m_out[row + j] = -1.0;
                    q_out[row + j] = std::numeric_limits<double>::quiet_NaN();
                }
                continue;
            }
            int iters = 0;
            for (;;) {
                if (iters >= sweep_cap) {
                    std::ostringstream os;
                    os << "obstacle iteration at t=" << axes.t.node(k) << ", w=" << axes.w.node(i)
                       << " did not settle within " << sweep_cap << " passes";
                    throw SolverError(os.str());
                }
                ++iters;
                parallel_for(static_cast<std::size_t>(np), threads, [&](std::size_t b, std::size_t e) {
                    for (std::size_t j = b; j < e; ++j) {
                        const auto r = table.evaluate(cur, i, static_cast<int>(j));
                        row_m[j] = r.value;
                        row_q[j] = r.q;
                    }
                });
                double delta = 0.0;
                for (int j = 0; j < np; ++j) {
                    const double v = std::max(tilde[row + j], row_m[j]);
                    delta = std::max(delta, std::abs(v - cur[row + j]));
                    cur[row + j] = v;
                }
                // M was evaluated on the values now stored only if nothing moved
                if (delta == 0.0) break;
                if (delta <= settings.obstacle_tol) {
                    parallel_for(static_cast<std::size_t>(np), threads, [&](std::size_t b, std::size_t e) {
                        for (std::size_t j = b; j < e; ++j) {
                            const auto r = table.evaluate(cur, i, static_cast<int>(j));
                            row_m[j] = r.value;
                            row_q[j] = r.q;
                        }
                    });
                    break;
                }
            }
            for (int j = 0; j < np; ++j) {
                m_out[row + j] = row_m[j];
                q_out[row + j] = row_q[j];
            }
            level_iters = std::max(level_iters, iters);
            sol.diag.total_sweeps += iters;
        }
        for (int j = 0; j < np; ++j) cur[j] = 0.0;
        sol.diag.sweeps_per_level[k] = level_iters;
        sol.diag.max_sweeps_used = std::max(sol.diag.max_sweeps_used, level_iters);

        std::copy(cur.begin(), cur.end(), sol.value.slice_mut(k).begin());
        std::copy(pis.begin(), pis.end(), sol.pi_star.slice_mut(k).begin());
    }
    for (const auto& c : counts) {
        sol.diag.directional_node_steps += c.directional;
        sol.diag.dropped_cross_node_steps += c.dropped;
    }
    return sol;
}

ResidualReport hjbqvi_residuals(const Problem& pr, const GridSpec& grid, const SolverSettings& settings,
                                const Solution& sol) {
    const GridAxes& axes = sol.axes;
    const int nt = axes.t.n, nw = axes.w.n, np = axes.p.n;
    const detail::Continuation op(pr, axes, settings);
    const double Dt = axes.t.step();
    const double dw = axes.w.step(), dp = axes.p.step();
    ResidualReport rep;
    rep.scheme_tol = settings.residual_c * (Dt + dw * dw + dp * dp);
    rep.min_interior = std::numeric_limits<double>::infinity();
    rep.min_layer = std::numeric_limits<double>::infinity();
    rep.min_gap = std::numeric_limits<double>::infinity();

    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nw; ++i)
            for (int j = 0; j < np; ++j) {
                const double m = sol.m_value.at(k, i, j);
                if (m > -1.0) rep.min_gap = std::min(rep.min_gap, sol.value.at(k, i, j) - m);
            }
    if (!std::isfinite(rep.min_gap)) rep.min_gap = 0.0;

    auto purchase = [&](int k, int i, int j) {
        return sol.value.at(k, i, j) - sol.m_value.at(k, i, j) <= settings.region_tol;
    };
    auto near_boundary = [&](int k, int i, int j) {
        for (int kk = k; kk <= k + 1; ++kk)
            for (int a = std::max(i - 1, 0); a <= std::min(i + 1, nw - 1); ++a)
                for (int b = std::max(j - 1, 0); b <= std::min(j + 1, np - 1); ++b)
                    if (purchase(kk, a, b)) return true;
        return false;
    };

    const double dt = grid.dt(pr.model.T);
    std::vector<double> prop, scratch;
    for (int k = 0; k + 1 < nt; ++k) {
        const auto next = sol.value.slice(k + 1).data();
        bool propagated = false;
        for (int i = 1; i < nw; ++i)
            for (int j = 0; j < np; ++j) {
                const double vk = sol.value.at(k, i, j);
                const double gap = vk - sol.m_value.at(k, i, j);
                if (!near_boundary(k, i, j)) {
                    const double f = (vk - sol.value.at(k + 1, i, j)) / Dt - op.evaluate(next, i, j).value;
                    const double combined = std::min(f, gap);
                    ++rep.n_interior;
                    if (combined < rep.min_interior) {
                        rep.min_interior = combined;
                        rep.worst_k = k, rep.worst_i = i, rep.worst_j = j;
                    }
                    continue;
                }
                if (!propagated) {
                    prop.assign(next.begin(), next.end());
                    continuation_interval(op, grid.time_substeps, dt, 1, prop, scratch, nullptr, nullptr);
                    propagated = true;
                }
                const double f = (vk - prop[static_cast<std::size_t>(i) * np + j]) / Dt;
                ++rep.n_layer;
                rep.min_layer = std::min(rep.min_layer, std::min(f, gap));
            }
    }
    if (!std::isfinite(rep.min_interior)) rep.min_interior = 0.0;
    if (!std::isfinite(rep.min_layer)) rep.min_layer = 0.0;
    rep.pass = rep.min_interior >= -rep.scheme_tol && rep.min_layer >= -rep.scheme_tol &&
               rep.min_gap >= -settings.obstacle_tol;
    return rep;
}

}  // namespace mexp
