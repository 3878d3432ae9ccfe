#include "scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mexp::detail {

Continuation::Continuation(const Problem& pr, const GridAxes& axes, const SolverSettings& settings)
    : pr_(&pr), axes_(axes), settings_(settings), nw_(axes.w.n), np_(axes.p.n) {
    const auto& m = pr.model;
    dw_ = axes.w.step();
    dp_ = axes.p.step();
    delta_ = settings.sl_kappa * m.T * dp_;
    if (!(delta_ > 0.0)) throw std::invalid_argument("solver.sl_kappa: must be positive");
    root_delta_ = std::sqrt(delta_);
    g_ = 1.0 - m.alpha;
    nodes_.resize(static_cast<std::size_t>(nw_) * np_);
    for (int i = 0; i < nw_; ++i)
        for (int j = 0; j < np_; ++j) {
            const double p = axes.p.node(j);
            const double spread = m.mu(0) - m.mu(1);
            const double mean = m.mu(1) + spread * p;
            Node& n = nodes_[static_cast<std::size_t>(i) * np_ + j];
            n.w = axes.w.node(i);
            n.p = p;
            n.m = mean;
            n.fp = m.Q(0, 0) * p + m.Q(1, 0) * (1.0 - p);
            n.sp = spread * p * (1.0 - p) / m.sigma;
        }
    const int extra = std::max(settings.n_pi, 0);
    for (int r = 0; r < extra; ++r) {
        const double s = extra == 1 ? 0.5 : static_cast<double>(r) / (extra - 1);
        pi_grid_.push_back(m.pi_lo + s * (m.pi_hi - m.pi_lo));
    }
}

double Continuation::sample(std::span<const double> v, double w, double p) const {
    p = std::clamp(p, 0.0, 1.0);
    const SliceView view(axes_, v);
    if (w <= axes_.w.hi) return view.bilinear(std::max(w, 0.0), p);
    return view.bilinear(axes_.w.hi, p) * std::pow(w / axes_.w.hi, g_);
}

Continuation::Result Continuation::evaluate_boundary(std::span<const double> v, int j) const {
    // Homogeneity at w_max: V_w = g V/w, V_ww = -alpha g V/w^2, V_wp = g V_p/w.
    const auto& m = pr_->model;
    const int i = nw_ - 1;
    const Node& n = nodes_[static_cast<std::size_t>(i) * np_ + j];
    const double vc = at(v, i, j);
    const double up = j + 1 < np_ ? (at(v, i, j + 1) - vc) / dp_ : 0.0;
    const double dn = j > 0 ? (vc - at(v, i, j - 1)) / dp_ : 0.0;
    const double dpp = (j > 0 && j + 1 < np_) ? (at(v, i, j + 1) - 2.0 * vc + at(v, i, j - 1)) / (dp_ * dp_) : 0.0;
    const double s2 = m.sigma * m.sigma;

    auto value = [&](double pi) {
        const double b = n.fp + pi * m.sigma * n.sp * g_;
        const double d = b > 0.0 ? up : (b < 0.0 ? dn : 0.0);
        return (pi * n.m * g_ - 0.5 * pi * pi * s2 * m.alpha * g_) * vc + b * d + 0.5 * n.sp * n.sp * dpp;
    };
    Result best{value(0.0), 0.0, StencilMode::kGrid};
    auto consider = [&](double pi) {
        pi = std::clamp(pi, m.pi_lo, m.pi_hi);
        const double val = value(pi);
        if (val > best.value || (val == best.value && std::abs(pi) < std::abs(best.pi))) best = {val, pi, StencilMode::kGrid};
    };
    consider(m.pi_lo);
    consider(m.pi_hi);
    const double curv = s2 * m.alpha * g_ * vc;
    if (curv > 0.0)
        for (double d : {up, dn}) consider((n.m * g_ * vc + m.sigma * n.sp * g_ * d) / curv);
    return best;
}

Continuation::Result Continuation::evaluate(std::span<const double> v, int i, int j) const {
    if (i == nw_ - 1) return evaluate_boundary(v, j);
    const auto& m = pr_->model;
    const Node& n = nodes_[static_cast<std::size_t>(i) * np_ + j];
    const double vc = at(v, i, j);
    const double vwp = at(v, i + 1, j), vwm = at(v, i - 1, j);
    const double d_up = (vwp - vc) / dw_;
    const double d_dn = (vc - vwm) / dw_;
    const double dww = (vwp - 2.0 * vc + vwm) / (dw_ * dw_);

    const bool p_inner = j > 0 && j + 1 < np_;
    double dp_drift = 0.0;
    if (n.fp > 0.0 && j + 1 < np_) dp_drift = n.fp * (at(v, i, j + 1) - vc) / dp_;
    else if (n.fp < 0.0 && j > 0) dp_drift = n.fp * (vc - at(v, i, j - 1)) / dp_;
    const double dpp = p_inner ? (at(v, i, j + 1) - 2.0 * vc + at(v, i, j - 1)) / (dp_ * dp_) : 0.0;

    const double sw1 = n.w * m.sigma;  // sigma_w per unit pi
    const double aw1 = 0.5 * sw1 * sw1 * dww;
    const double ap = 0.5 * n.sp * n.sp * dpp;
    const bool coupled = n.sp != 0.0 && p_inner;
    const bool directional = coupled && settings_.cross_fallback == CrossFallback::kDirectional;

    auto drift = [&](double pi) {
        const double b = pi * n.w * n.m;
        return dp_drift + b * (b > 0.0 ? d_up : (b < 0.0 ? d_dn : 0.0));
    };

    auto value = [&](double pi, StencilMode& mode) {
        if (pi == 0.0 || !coupled) {
            mode = StencilMode::kGrid;
            return drift(pi) + pi * pi * aw1 + ap;
        }
        // Seven-point cross stencil is monotone only where both diagonals
        // dominate, which for this rank-one diffusion means equal ratios.
        const double rw = std::abs(pi) * sw1 / dw_;
        const double rp = std::abs(n.sp) / dp_;
        if (std::abs(rw - rp) <= 1e-12 * std::max(rw, rp)) {
            mode = StencilMode::kSevenPoint;
            const double c = pi * sw1 * n.sp;
            const double h = std::abs(c) / (2.0 * dw_ * dp_);
            const double diag = c > 0.0 ? at(v, i + 1, j + 1) + at(v, i - 1, j - 1) : at(v, i + 1, j - 1) + at(v, i - 1, j + 1);
            const double cross = h * (2.0 * vc + diag - vwp - vwm - at(v, i, j + 1) - at(v, i, j - 1));
            return drift(pi) + pi * pi * aw1 + ap + cross;
        }
        if (!directional) {
            mode = StencilMode::kDropped;
            return drift(pi) + pi * pi * aw1 + ap;
        }
        mode = StencilMode::kDirectional;
        const double ew = root_delta_ * pi * sw1;
        const double ep = root_delta_ * n.sp;
        const double second = (sample(v, n.w + ew, n.p + ep) + sample(v, n.w - ew, n.p - ep) - 2.0 * vc) / (2.0 * delta_);
        return drift(pi) + second;
    };

    Result best{0.0, 0.0, StencilMode::kGrid};
    best.value = value(0.0, best.mode);
    auto consider = [&](double pi) {
        pi = std::clamp(pi, m.pi_lo, m.pi_hi);
        StencilMode mode;
        const double val = value(pi, mode);
        if (val > best.value || (val == best.value && std::abs(pi) < std::abs(best.pi))) best = {val, pi, mode};
    };
    consider(m.pi_lo);
    consider(m.pi_hi);
    const double b2 = aw1;  // coefficient of pi^2 without cross terms
    if (b2 < 0.0) {
        consider(-n.w * n.m * d_up / (2.0 * b2));
        consider(-n.w * n.m * d_dn / (2.0 * b2));
    }
    if (coupled) {
        const double vw = (vwp - vwm) / (2.0 * dw_);
        const double vwp_c =
            (at(v, i + 1, j + 1) - at(v, i + 1, j - 1) - at(v, i - 1, j + 1) + at(v, i - 1, j - 1)) / (4.0 * dw_ * dp_);
        const double a = n.w * n.m * vw + sw1 * n.sp * vwp_c;
        if (b2 < 0.0) consider(-a / (2.0 * b2));
        if (directional)
            for (double pi : pi_grid_) consider(pi);
    }
    return best;
}

double Continuation::coefficient_bound(int i, int j) const {
    const auto& m = pr_->model;
    const Node& n = nodes_[static_cast<std::size_t>(i) * np_ + j];
    const bool p_inner = j > 0 && j + 1 < np_;
    const double s2 = m.sigma * m.sigma;
    double worst = 0.0;
    constexpr int kSamples = 64;
    for (int r = 0; r <= kSamples; ++r) {
        const double pi = m.pi_lo + (m.pi_hi - m.pi_lo) * r / kSamples;
        double c = 0.0;
        if (i == nw_ - 1) {
            const double b = n.fp + pi * m.sigma * n.sp * g_;
            const double self = pi * n.m * g_ - 0.5 * pi * pi * s2 * m.alpha * g_;
            c = std::abs(b) / dp_ + (p_inner ? n.sp * n.sp / (dp_ * dp_) : 0.0) - self;
        } else {
            const double bw = pi * n.w * n.m;
            c = std::abs(bw) / dw_ + std::abs(n.fp) / dp_;
            const bool coupled = n.sp != 0.0 && p_inner && pi != 0.0;
            if (coupled && settings_.cross_fallback == CrossFallback::kDirectional) {
                c += 1.0 / delta_;
                // the grid-aligned pi = 0 candidate still uses the p stencil
                c = std::max(c, std::abs(n.fp) / dp_ + n.sp * n.sp / (dp_ * dp_));
            } else {
                c += pi * pi * n.w * n.w * s2 / (dw_ * dw_) + (p_inner ? n.sp * n.sp / (dp_ * dp_) : 0.0);
            }
        }
        worst = std::max(worst, c);
    }
    return worst;
}

InterventionTable::InterventionTable(const Problem& pr, const GridAxes& axes, int n_q)
    : nw_(axes.w.n), np_(axes.p.n), nq_(n_q), nz_(pr.noise.n_quad()) {
    const auto& mu = pr.model.mu;
    const auto& nodes = pr.noise.nodes();
    const auto& weights = pr.noise.weights();

    reg_w_.resize(static_cast<std::size_t>(np_) * 2 * nz_);
    for (int j = 0; j < np_; ++j) {
        const double p = axes.p.node(j);
        for (int n = 0; n < 2; ++n)
            for (int z = 0; z < nz_; ++z)
                reg_w_[(static_cast<std::size_t>(j) * 2 + n) * nz_ + z] = (n == 0 ? p : 1.0 - p) * weights[z];
    }

    top_row_.assign(nw_, -1);
    jumps_.resize(static_cast<std::size_t>(nw_) * nq_);
    const std::size_t per_jump = static_cast<std::size_t>(np_) * 2 * nz_;
    p_cell_.assign(jumps_.size() * per_jump, 0);
    p_theta_.assign(jumps_.size() * per_jump, 0.0);

    for (int i = 0; i < nw_; ++i) {
        const double w = axes.w.node(i);
        const auto chi = pr.cost.chi(0.0, w);
        if (!chi) continue;
        const auto top = axes.w.locate(std::max(0.0, w - pr.cost.k0()));
        top_row_[i] = top.theta > 0.0 ? top.cell + 1 : top.cell;
        for (int l = 0; l < nq_; ++l) {
            const double q = nq_ == 1 ? 0.0 : *chi * l / (nq_ - 1);
            const auto loc = axes.w.locate(std::max(0.0, w - pr.cost.cost(0.0, q)));
            jumps_[static_cast<std::size_t>(i) * nq_ + l] = {q, loc.cell, loc.theta};
            const double shift = q * (mu(0) - mu(1)) / (1.0 - q);
            for (int j = 0; j < np_; ++j) {
                const double p = axes.p.node(j);
                const double logit = std::log(p) - std::log1p(-p);
                for (int n = 0; n < 2; ++n)
                    for (int z = 0; z < nz_; ++z) {
                        double post = p;
                        if (q > 0.0 && p > 0.0 && p < 1.0) {
                            // noise argument under regime 1 and regime 2
                            const double a1 = n == 0 ? nodes[z] : nodes[z] - shift;
                            const double a2 = n == 0 ? nodes[z] + shift : nodes[z];
                            const double llr = pr.noise.log_kernel(a1) - pr.noise.log_kernel(a2);
                            post = 1.0 / (1.0 + std::exp(-(logit + llr)));
                        }
                        const auto lp = axes.p.locate(post);
                        const std::size_t idx = ((static_cast<std::size_t>(i) * nq_ + l) * np_ + j) * 2 * nz_ + n * nz_ + z;
                        p_cell_[idx] = lp.cell;
                        p_theta_[idx] = lp.theta;
                    }
            }
        }
    }
}

InterventionTable::Result InterventionTable::evaluate(std::span<const double> v, int i, int j) const {
    if (top_row_[i] < 0) return {-1.0, std::numeric_limits<double>::quiet_NaN()};
    Result best{-std::numeric_limits<double>::infinity(), 0.0};
    const double* wts = &reg_w_[static_cast<std::size_t>(j) * 2 * nz_];
    for (int l = 0; l < nq_; ++l) {
        const Jump& jp = jumps_[static_cast<std::size_t>(i) * nq_ + l];
        const double* r0 = &v[static_cast<std::size_t>(jp.cell) * np_];
        const double* r1 = jp.cell + 1 < nw_ ? r0 + np_ : r0;
        const std::size_t base = ((static_cast<std::size_t>(i) * nq_ + l) * np_ + j) * 2 * nz_;
        double acc = 0.0;
        for (int e = 0; e < 2 * nz_; ++e) {
            if (wts[e] == 0.0) continue;
            const int c = p_cell_[base + e];
            const double th = p_theta_[base + e];
            const double a = r0[c] + th * (r0[c + 1] - r0[c]);
            const double b = r1[c] + th * (r1[c + 1] - r1[c]);
            acc += wts[e] * (a + jp.theta * (b - a));
        }
        if (acc > best.value) best = {acc, jp.q};
    }
    return best;
}

}  // namespace mexp::detail
