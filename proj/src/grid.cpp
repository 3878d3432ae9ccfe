#include "mexp/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mexp {

Axis::Locate Axis::locate(double x) const {
    bool clamped = false;
    if (x <= lo) {
        clamped = x < lo;
        return {0, 0.0, clamped};
    }
    if (x >= hi) {
        clamped = x > hi;
        return {n - 2, 1.0, clamped};
    }
    const double s = (x - lo) / step();
    int c = static_cast<int>(s);
    c = std::clamp(c, 0, n - 2);
    return {c, std::clamp(s - c, 0.0, 1.0), false};
}

double SliceView::bilinear(double w, double p) const {
    const auto lw = axes_->w.locate(w);
    const auto lp = axes_->p.locate(p);
    const double v00 = at(lw.cell, lp.cell);
    const double v01 = at(lw.cell, lp.cell + 1);
    const double v10 = at(lw.cell + 1, lp.cell);
    const double v11 = at(lw.cell + 1, lp.cell + 1);
    const double a = v00 + lp.theta * (v01 - v00);
    const double b = v10 + lp.theta * (v11 - v10);
    return a + lw.theta * (b - a);
}

double NodeField::trilinear(double t, double w, double p) const {
    const auto lt = axes_.t.locate(t);
    const double a = slice(lt.cell).bilinear(w, p);
    if (lt.theta == 0.0) return a;
    const double b = slice(lt.cell + 1).bilinear(w, p);
    return a + lt.theta * (b - a);
}

int time_slice_at(const Axis& t_axis, double t) {
    if (t >= t_axis.hi - 1e-12 * std::max(1.0, std::abs(t_axis.hi))) return t_axis.n - 1;
    const double s = (t - t_axis.lo) / t_axis.step();
    // nudge so that t exactly on a node maps to that node despite rounding
    int k = static_cast<int>(std::floor(s + 1e-9));
    return std::clamp(k, 0, t_axis.n - 2);
}

}  // namespace mexp
