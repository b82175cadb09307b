#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hpsfde::stats {

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            carry_ += (sum_ - t) + v;
        } else {
            carry_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::size_t n = 0;

    [[nodiscard]] double stderr_of_mean() const noexcept {
        return n > 1 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
    }
};

/// Two-pass compensated mean and unbiased variance.
MeanVar mean_var(std::span<const double> xs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Residual-based standard error of the slope.
    double slope_stderr = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = a + b x. Requires at least two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated empirical quantile (type 7), q in [0, 1].
double quantile(std::vector<double> xs, double q);

}  // namespace hpsfde::stats
