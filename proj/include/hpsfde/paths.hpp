#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace hpsfde {

/// Dense piecewise-linear trajectory on [theta_lower * t0, last grid time].
///
/// Grid points are appended in strictly increasing time order. The first
/// points hold the initial segment xi on [theta_lower * t0, t0]; integration
/// appends the rest. Each point carries the regime in force from that time
/// onward (0 for points before t0, where no regime is defined).
///
/// Lookups use a bucket index over a uniform width so eval() is O(1) for the
/// uniform-plus-switch-times grids produced by the integrator. Storage grows
/// linearly with step count; nothing is evicted because pantograph lookback
/// reaches a fixed fraction of the whole history.
class DensePath {
public:
    DensePath() = default;
    /// bucket_width <= 0 disables the bucket index (binary search only).
    DensePath(int dim, double theta_lower, double t0, double bucket_width = 0.0);

    void reserve(std::size_t points);
    void append(double t, std::span<const double> x, int regime);
    /// Marks the guard trip time; no further points may be appended.
    void mark_exploded(double t);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double theta_lower() const noexcept { return theta_lower_; }
    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] std::size_t size() const noexcept { return times_.size(); }
    [[nodiscard]] bool empty() const noexcept { return times_.empty(); }
    [[nodiscard]] double start_time() const { return times_.front(); }
    [[nodiscard]] double end_time() const { return times_.back(); }
    [[nodiscard]] std::optional<double> exploded_at() const noexcept { return exploded_at_; }
    [[nodiscard]] bool exploded() const noexcept { return exploded_at_.has_value(); }

    [[nodiscard]] std::span<const double> times() const noexcept { return times_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<const int> regimes() const noexcept { return regimes_; }
    [[nodiscard]] std::span<const double> value_at(std::size_t k) const {
        return {values_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    [[nodiscard]] double time_at(std::size_t k) const { return times_[k]; }
    [[nodiscard]] int regime_at(std::size_t k) const { return regimes_[k]; }
    /// Index of the grid point at t0 (first integration point).
    [[nodiscard]] std::size_t t0_index() const noexcept { return t0_index_; }

    /// Largest k with times[k] <= t. Requires start_time() <= t.
    [[nodiscard]] std::size_t locate(double t) const;
    /// Index of the grid point equal to t, if one exists.
    [[nodiscard]] std::optional<std::size_t> find_node(double t) const;

    /// Piecewise-linear interpolation; exact at grid points.
    void eval(double t, std::span<double> out) const;
    [[nodiscard]] std::vector<double> eval(double t) const;
    /// First component; convenience for scalar models.
    [[nodiscard]] double eval_scalar(double t) const;

    void write_csv(std::ostream& os) const;

private:
    void check_domain(double t) const;

    int dim_ = 1;
    double theta_lower_ = 0.5;
    double t0_ = 1.0;
    double bucket_origin_ = 0.0;
    double bucket_width_ = 0.0;
    std::size_t t0_index_ = 0;
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<int> regimes_;
    std::vector<std::uint32_t> buckets_;
    std::optional<double> exploded_at_;
};

/// The segment x_t: theta -> x(theta * t) for theta in [theta_lower, 1].
/// Non-owning; the path must outlive the view.
class SegmentView {
public:
    SegmentView(const DensePath& path, double anchor) : path_(&path), anchor_(anchor) {}

    [[nodiscard]] const DensePath& path() const noexcept { return *path_; }
    [[nodiscard]] double anchor() const noexcept { return anchor_; }
    [[nodiscard]] int dim() const noexcept { return path_->dim(); }
    [[nodiscard]] double theta_lower() const noexcept { return path_->theta_lower(); }

    void at(double theta, std::span<double> out) const { path_->eval(theta * anchor_, out); }
    [[nodiscard]] double at_scalar(double theta) const { return path_->eval_scalar(theta * anchor_); }
    /// phi(1), the current state.
    void current(std::span<double> out) const { path_->eval(anchor_, out); }

private:
    const DensePath* path_;
    double anchor_;
};

/// View anchored at t; requires t0 <= t <= last grid time.
SegmentView segment(const DensePath& path, double t);

/// sup over theta of |phi(theta)|, using every stored breakpoint inside
/// [theta_lower * t, t] plus `nodes` equispaced samples. Exact for the
/// piecewise-linear representation.
double sup_norm(const SegmentView& view, int nodes = 2);

}  // namespace hpsfde
