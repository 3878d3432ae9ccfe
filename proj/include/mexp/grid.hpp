#pragma once

// Uniform (t, w, p) grids, row-major node fields, and interpolation.

#include <cstddef>
#include <span>
#include <vector>

namespace mexp {

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;

    [[nodiscard]] double step() const { return (hi - lo) / (n - 1); }
    [[nodiscard]] double node(int i) const { return i == n - 1 ? hi : lo + i * step(); }

    /// Cell index c in [0, n-2] and weight theta in [0,1] with
    /// x = (1-theta) node(c) + theta node(c+1); x is clamped into [lo, hi].
    struct Locate {
        int cell;
        double theta;
        bool clamped;
    };
    [[nodiscard]] Locate locate(double x) const;
};

struct GridAxes {
    Axis t;
    Axis w;
    Axis p;  // first-regime probability; p^2 = 1 - p^1

    [[nodiscard]] std::size_t slice_size() const { return static_cast<std::size_t>(w.n) * p.n; }
    [[nodiscard]] std::size_t size() const { return slice_size() * t.n; }
    [[nodiscard]] std::size_t index(int k, int i, int j) const {
        return (static_cast<std::size_t>(k) * w.n + i) * p.n + j;
    }
};

/// Read-only view of one time slice laid out as [w][p].
class SliceView {
public:
    SliceView(const GridAxes& axes, std::span<const double> data) : axes_(&axes), data_(data) {}

    [[nodiscard]] double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * axes_->p.n + j]; }
    [[nodiscard]] const GridAxes& axes() const { return *axes_; }
    [[nodiscard]] std::span<const double> data() const { return data_; }

    /// Bilinear interpolation in (w, p); queries outside the box are clamped.
    [[nodiscard]] double bilinear(double w, double p) const;

private:
    const GridAxes* axes_;
    std::span<const double> data_;
};

/// A scalar field on every (t, w, p) node, row-major in (t, w, p).
class NodeField {
public:
    NodeField() = default;
    NodeField(GridAxes axes, double fill = 0.0) : axes_(axes), data_(axes.size(), fill) {}

    [[nodiscard]] const GridAxes& axes() const { return axes_; }
    [[nodiscard]] double& at(int k, int i, int j) { return data_[axes_.index(k, i, j)]; }
    [[nodiscard]] double at(int k, int i, int j) const { return data_[axes_.index(k, i, j)]; }
    [[nodiscard]] std::vector<double>& data() { return data_; }
    [[nodiscard]] const std::vector<double>& data() const { return data_; }

    [[nodiscard]] SliceView slice(int k) const {
        return SliceView(axes_, std::span<const double>(data_).subspan(k * axes_.slice_size(), axes_.slice_size()));
    }
    [[nodiscard]] std::span<double> slice_mut(int k) {
        return std::span<double>(data_).subspan(k * axes_.slice_size(), axes_.slice_size());
    }

    /// Linear in t, bilinear in (w, p); clamped to the grid box.
    [[nodiscard]] double trilinear(double t, double w, double p) const;

private:
    GridAxes axes_;
    std::vector<double> data_;
};

/// Index of the time slice governing [t_k, t_{k+1}); the terminal node for t >= T.
[[nodiscard]] int time_slice_at(const Axis& t_axis, double t);

}  // namespace mexp
