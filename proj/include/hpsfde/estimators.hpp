#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "hpsfde/integrator.hpp"

namespace hpsfde {

enum class RateKind { MomentExponential, AsExponential, TimeAverage, AsPolynomial };

std::string_view to_string(RateKind kind) noexcept;

struct RateQuantiles {
    double q50 = 0.0;
    double q90 = 0.0;
    double q100 = 0.0;
};

struct RateReport {
    RateKind kind = RateKind::MomentExponential;
    int power = 2;
    /// Moment: slope of log E|x|^p. As/poly: worst (largest) per-path slope.
    /// Time average: value at T.
    double fitted_rate = 0.0;
    /// Moment: delta-method error over paths. As/poly: error of the mean
    /// per-path slope. Time average: error of the mean per-path average.
    double standard_error = 0.0;
    /// Residual-based slope error of the moment regression.
    double fit_standard_error = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    std::size_t n_paths_used = 0;
    std::size_t n_exploded = 0;
    /// Per-path slopes (as/poly only), in path order.
    std::vector<double> per_path_rates;
    RateQuantiles quantiles;
    /// (t, statistic) on the shared grid.
    std::vector<double> series_t;
    std::vector<double> series_value;

    /// Columns t,statistic followed by a footer block of key,value rows.
    void write_csv(std::ostream& os) const;
};

struct EstimatorOptions {
    int workers = 0;
    /// Minimum number of non-exploded paths.
    std::size_t min_paths = 100;
    /// Window is [t0 + window_fraction (T - t0), T].
    double window_fraction = 0.5;
};

constexpr double kLogFloor = 1e-300;

RateReport estimate_moment_rate(const SimulationBatch& batch, int power, const EstimatorOptions& opts = {});
RateReport estimate_as_rate(const SimulationBatch& batch, int power, const EstimatorOptions& opts = {});
/// Running (1/(t - t0)) int_{t0}^t E|x(s)|^p ds by the trapezoid rule; the
/// series holds the running value, fitted_rate its value at T.
RateReport estimate_time_average(const SimulationBatch& batch, int power, const EstimatorOptions& opts = {});
/// Requires log(1 + T) >= 3.
RateReport estimate_polynomial_rate(const SimulationBatch& batch, int power, const EstimatorOptions& opts = {});

/// Throws ExplosionBudgetExceeded when more than max_fraction of the paths exploded.
void enforce_explosion_budget(const SimulationBatch& batch, double max_fraction = 0.01);

}  // namespace hpsfde
