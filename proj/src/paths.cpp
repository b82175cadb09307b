#include "hpsfde/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hpsfde/error.hpp"

namespace hpsfde {

namespace {

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double time_tolerance(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

}  // namespace

DensePath::DensePath(int dim, double theta_lower, double t0, double bucket_width)
    : dim_(dim), theta_lower_(theta_lower), t0_(t0), bucket_origin_(theta_lower * t0), bucket_width_(bucket_width) {
    if (dim < 1) throw Error(ErrorCode::InvalidArgument, "path dimension must be positive");
    if (!(theta_lower > 0.0 && theta_lower < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "theta_lower must lie in (0, 1)");
    }
    if (!(t0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "t0 must be positive");
}

void DensePath::reserve(std::size_t points) {
    times_.reserve(points);
    values_.reserve(points * static_cast<std::size_t>(dim_));
    regimes_.reserve(points);
}

void DensePath::append(double t, std::span<const double> x, int regime) {
    if (exploded_at_) throw Error(ErrorCode::PathExploded, "cannot append to an exploded path");
    if (static_cast<int>(x.size()) != dim_) throw Error(ErrorCode::DimensionMismatch, "state size != path dim");
    if (!times_.empty() && !(t > times_.back())) {
        throw Error(ErrorCode::InvalidArgument, "path times must be strictly increasing");
    }
    const auto k = static_cast<std::uint32_t>(times_.size());
    if (times_.empty() || t <= t0_ + time_tolerance(t0_)) t0_index_ = k;
    times_.push_back(t);
    values_.insert(values_.end(), x.begin(), x.end());
    regimes_.push_back(regime);

    if (bucket_width_ > 0.0) {
        while (bucket_origin_ + static_cast<double>(buckets_.size()) * bucket_width_ <= t) buckets_.push_back(k);
    }
}

void DensePath::mark_exploded(double t) { exploded_at_ = t; }

std::size_t DensePath::locate(double t) const {
    const std::size_t n = times_.size();
    std::size_t k = 0;
    const double offset = (t - bucket_origin_) / bucket_width_;
    if (bucket_width_ > 0.0 && offset >= 0.0 && offset < static_cast<double>(buckets_.size())) {
        k = buckets_[static_cast<std::size_t>(offset)];
        if (k > 0) --k;
        while (k > 0 && times_[k] > t) --k;
        while (k + 1 < n && times_[k + 1] <= t) ++k;
        return k;
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
}

std::optional<std::size_t> DensePath::find_node(double t) const {
    if (times_.empty() || t < times_.front() || t > times_.back()) return std::nullopt;
    const std::size_t k = locate(t);
    if (times_[k] == t) return k;
    return std::nullopt;
}

void DensePath::check_domain(double t) const {
    if (times_.empty()) throw Error(ErrorCode::OutOfDomain, "path is empty");
    if (t < times_.front() - time_tolerance(times_.front())) {
        throw Error(ErrorCode::OutOfDomain, "time before start of path");
    }
    if (t > times_.back() + time_tolerance(times_.back())) {
        if (exploded_at_) throw Error(ErrorCode::PathExploded, "lookup past explosion time");
        throw Error(ErrorCode::OutOfDomain, "time after end of path");
    }
}

void DensePath::eval(double t, std::span<double> out) const {
    check_domain(t);
    t = std::clamp(t, times_.front(), times_.back());
    const std::size_t k = locate(t);
    const auto d = static_cast<std::size_t>(dim_);
    const double* a = values_.data() + k * d;
    if (times_[k] == t || k + 1 == times_.size()) {
        std::copy(a, a + d, out.begin());
        return;
    }
    const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    const double* b = a + d;
    for (std::size_t j = 0; j < d; ++j) out[j] = a[j] + w * (b[j] - a[j]);
}

std::vector<double> DensePath::eval(double t) const {
    std::vector<double> out(static_cast<std::size_t>(dim_));
    eval(t, out);
    return out;
}

double DensePath::eval_scalar(double t) const {
    check_domain(t);
    t = std::clamp(t, times_.front(), times_.back());
    const std::size_t k = locate(t);
    const auto d = static_cast<std::size_t>(dim_);
    const double a = values_[k * d];
    if (times_[k] == t || k + 1 == times_.size()) return a;
    const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    return a + w * (values_[(k + 1) * d] - a);
}

void DensePath::write_csv(std::ostream& os) const {
    os << "time,regime";
    for (int j = 1; j <= dim_; ++j) os << ",x_" << j;
    os << '\n';
    char buf[64];
    for (std::size_t k = 0; k < times_.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", times_[k]);
        os << buf << ',' << regimes_[k];
        for (double v : value_at(k)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << ',' << buf;
        }
        os << '\n';
    }
}

SegmentView segment(const DensePath& path, double t) {
    if (t < path.t0() - time_tolerance(path.t0())) {
        throw Error(ErrorCode::OutOfDomain, "segment anchor precedes t0");
    }
    if (path.empty() || t > path.end_time() + time_tolerance(path.end_time())) {
        throw Error(path.exploded() ? ErrorCode::PathExploded : ErrorCode::OutOfDomain,
                    "segment anchor beyond the stored path");
    }
    return {path, t};
}

double sup_norm(const SegmentView& view, int nodes) {
    if (nodes < 2) throw Error(ErrorCode::InvalidArgument, "sup_norm needs at least two nodes");
    const DensePath& path = view.path();
    const double hi = view.anchor();
    const double lo = view.theta_lower() * hi;
    std::vector<double> x(static_cast<std::size_t>(path.dim()));

    path.eval(lo, x);
    double best = norm(x);
    path.eval(hi, x);
    best = std::max(best, norm(x));

    const auto times = path.times();
    auto first = std::upper_bound(times.begin(), times.end(), lo);
    for (auto it = first; it != times.end() && *it < hi; ++it) {
        best = std::max(best, norm(path.value_at(static_cast<std::size_t>(it - times.begin()))));
    }
    for (int j = 1; j + 1 < nodes; ++j) {
        const double theta = view.theta_lower() + (1.0 - view.theta_lower()) * j / (nodes - 1);
        view.at(theta, x);
        best = std::max(best, norm(x));
    }
    return best;
}

}  // namespace hpsfde
