#include "hpsfde/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hpsfde/error.hpp"
#include "hpsfde/stats.hpp"

namespace hpsfde {

std::string_view to_string(RateKind kind) noexcept {
    switch (kind) {
        case RateKind::MomentExponential: return "moment-exponential";
        case RateKind::AsExponential: return "as-exponential";
        case RateKind::TimeAverage: return "time-average";
        case RateKind::AsPolynomial: return "as-polynomial";
    }
    return "unknown";
}

void RateReport::write_csv(std::ostream& os) const {
    char buf[128];
    os << "t,statistic\n";
    for (std::size_t j = 0; j < series_t.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", series_t[j], series_value[j]);
        os << buf;
    }
    const auto row = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "# %s,%.17g\n", key, v);
        os << buf;
    };
    os << "# kind," << to_string(kind) << "\n";
    os << "# power," << power << "\n";
    row("fitted_rate", fitted_rate);
    row("stderr", standard_error);
    row("window_start", window_start);
    row("window_end", window_end);
    os << "# n_paths_used," << n_paths_used << "\n";
    os << "# n_exploded," << n_exploded << "\n";
    if (kind == RateKind::AsExponential || kind == RateKind::AsPolynomial) {
        row("q50", quantiles.q50);
        row("q90", quantiles.q90);
        row("q100", quantiles.q100);
    }
}

namespace {

// |x(t_j)| for every usable path on the shared grid, row-major by path.
struct GridSample {
    std::vector<double> grid;
    std::vector<std::size_t> paths;
    std::vector<double> norms;
    std::size_t window_begin = 0;
    std::size_t n_exploded = 0;

    [[nodiscard]] std::size_t columns() const noexcept { return grid.size(); }
    [[nodiscard]] const double* row(std::size_t r) const { return norms.data() + r * grid.size(); }
};

GridSample sample_grid(const SimulationBatch& batch, const EstimatorOptions& opts) {
    if (batch.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty batch");
    if (!(opts.window_fraction >= 0.0 && opts.window_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "window fraction must lie in [0, 1)");
    }
    GridSample s;
    s.grid = batch.shared_grid();
    const double t0 = batch.model.t0;
    const double ta = t0 + opts.window_fraction * (batch.config.T - t0);
    s.window_begin = static_cast<std::size_t>(
        std::lower_bound(s.grid.begin(), s.grid.end(), ta - 1e-9 * batch.config.dt) - s.grid.begin());
    if (s.grid.size() - s.window_begin < 2) throw Error(ErrorCode::DegenerateWindow, "window holds < 2 points");

    for (std::size_t p = 0; p < batch.size(); ++p) {
        if (batch.results[p].exploded()) {
            ++s.n_exploded;
        } else {
            s.paths.push_back(p);
        }
    }
    if (s.paths.empty()) throw Error(ErrorCode::AllExploded, "every path exploded");
    if (s.paths.size() < opts.min_paths) {
        throw Error(ErrorCode::InsufficientPaths, std::to_string(s.paths.size()) + " usable paths, need " +
                                                      std::to_string(opts.min_paths));
    }
    const std::size_t cols = s.grid.size();
    s.norms.assign(s.paths.size() * cols, 0.0);
    parallel_for(s.paths.size(), opts.workers, [&](std::size_t r) {
        const DensePath& path = batch.results[s.paths[r]].path;
        std::vector<double> x(static_cast<std::size_t>(path.dim()));
        double* out = s.norms.data() + r * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            path.eval(s.grid[j], x);
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            out[j] = std::sqrt(r2);
        }
    });
    return s;
}

double log_power(double norm, int power) { return power * std::log(std::max(norm, kLogFloor)); }

RateReport base_report(RateKind kind, int power, const GridSample& s) {
    if (power <= 0) throw Error(ErrorCode::InvalidArgument, "power must be positive");
    RateReport rep;
    rep.kind = kind;
    rep.power = power;
    rep.window_start = s.grid[s.window_begin];
    rep.window_end = s.grid.back();
    rep.n_paths_used = s.paths.size();
    rep.n_exploded = s.n_exploded;
    rep.series_t = s.grid;
    return rep;
}

RateReport per_path_slopes(RateKind kind, const SimulationBatch& batch, int power, const EstimatorOptions& opts,
                           bool log_time) {
    const GridSample s = sample_grid(batch, opts);
    RateReport rep = base_report(kind, power, s);
    const std::size_t cols = s.columns();
    std::vector<double> abscissa(s.grid.begin() + static_cast<std::ptrdiff_t>(s.window_begin), s.grid.end());
    if (log_time) {
        for (double& t : abscissa) t = std::log1p(t);
    }
    const std::size_t n = s.paths.size();
    rep.per_path_rates.assign(n, 0.0);
    parallel_for(n, opts.workers, [&](std::size_t r) {
        const double* row = s.row(r);
        std::vector<double> y(cols - s.window_begin);
        for (std::size_t j = s.window_begin; j < cols; ++j) y[j - s.window_begin] = log_power(row[j], power);
        rep.per_path_rates[r] = stats::least_squares(abscissa, y).slope;
    });
    rep.series_value.assign(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        stats::CompensatedSum acc;
        for (std::size_t r = 0; r < n; ++r) acc.add(log_power(s.row(r)[j], power));
        rep.series_value[j] = acc.value() / static_cast<double>(n);
    }
    rep.quantiles.q50 = stats::quantile(rep.per_path_rates, 0.5);
    rep.quantiles.q90 = stats::quantile(rep.per_path_rates, 0.9);
    rep.quantiles.q100 = stats::quantile(rep.per_path_rates, 1.0);
    rep.fitted_rate = rep.quantiles.q100;
    rep.standard_error = stats::mean_var(rep.per_path_rates).stderr_of_mean();
    return rep;
}

}  // namespace

RateReport estimate_moment_rate(const SimulationBatch& batch, int power, const EstimatorOptions& opts) {
    const GridSample s = sample_grid(batch, opts);
    RateReport rep = base_report(RateKind::MomentExponential, power, s);
    const std::size_t cols = s.columns();
    const std::size_t n = s.paths.size();

    std::vector<double> moment(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        stats::CompensatedSum acc;
        for (std::size_t r = 0; r < n; ++r) acc.add(std::pow(s.row(r)[j], power));
        moment[j] = acc.value() / static_cast<double>(n);
    }
    rep.series_value = moment;

    const std::span<const double> t(s.grid.data() + s.window_begin, cols - s.window_begin);
    std::vector<double> y(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) y[j] = std::log(std::max(moment[s.window_begin + j], kLogFloor));
    const auto fit = stats::least_squares(t, y);
    rep.fitted_rate = fit.slope;
    rep.fit_standard_error = fit.slope_stderr;

    // Delta method: slope = sum_j w_j log m_j, so each path contributes
    // sum_j w_j (|x_j|^p - m_j) / m_j to the linearized estimator.
    stats::CompensatedSum tsum;
    for (double v : t) tsum.add(v);
    const double tbar = tsum.value() / static_cast<double>(t.size());
    stats::CompensatedSum sxx;
    for (double v : t) sxx.add((v - tbar) * (v - tbar));
    std::vector<double> influence(n);
    parallel_for(n, opts.workers, [&](std::size_t r) {
        const double* row = s.row(r);
        double acc = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double m = moment[s.window_begin + j];
            if (!(m > 0.0)) continue;
            const double w = (t[j] - tbar) / sxx.value();
            acc += w * (std::pow(row[s.window_begin + j], power) - m) / m;
        }
        influence[r] = acc;
    });
    rep.standard_error = stats::mean_var(influence).stderr_of_mean();
    return rep;
}

RateReport estimate_as_rate(const SimulationBatch& batch, int power, const EstimatorOptions& opts) {
    return per_path_slopes(RateKind::AsExponential, batch, power, opts, false);
}

RateReport estimate_polynomial_rate(const SimulationBatch& batch, int power, const EstimatorOptions& opts) {
    if (std::log1p(batch.config.T) < 3.0) {
        throw Error(ErrorCode::InvalidArgument, "polynomial rate needs log(1 + T) >= 3");
    }
    return per_path_slopes(RateKind::AsPolynomial, batch, power, opts, true);
}

RateReport estimate_time_average(const SimulationBatch& batch, int power, const EstimatorOptions& opts) {
    const GridSample s = sample_grid(batch, opts);
    RateReport rep = base_report(RateKind::TimeAverage, power, s);
    const std::size_t cols = s.columns();
    const std::size_t n = s.paths.size();
    const double t0 = s.grid.front();

    std::vector<double> moment(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        stats::CompensatedSum acc;
        for (std::size_t r = 0; r < n; ++r) acc.add(std::pow(s.row(r)[j], power));
        moment[j] = acc.value() / static_cast<double>(n);
    }
    rep.series_value.assign(cols, 0.0);
    rep.series_value[0] = moment[0];
    stats::CompensatedSum integral;
    for (std::size_t j = 1; j < cols; ++j) {
        integral.add(0.5 * (s.grid[j] - s.grid[j - 1]) * (moment[j] + moment[j - 1]));
        rep.series_value[j] = integral.value() / (s.grid[j] - t0);
    }
    rep.fitted_rate = rep.series_value.back();

    std::vector<double> averages(n);
    parallel_for(n, opts.workers, [&](std::size_t r) {
        const double* row = s.row(r);
        stats::CompensatedSum acc;
        for (std::size_t j = 1; j < cols; ++j) {
            acc.add(0.5 * (s.grid[j] - s.grid[j - 1]) * (std::pow(row[j], power) + std::pow(row[j - 1], power)));
        }
        averages[r] = acc.value() / (s.grid.back() - t0);
    });
    rep.standard_error = stats::mean_var(averages).stderr_of_mean();
    return rep;
}

void enforce_explosion_budget(const SimulationBatch& batch, double max_fraction) {
    const std::size_t exploded = batch.exploded_count();
    if (static_cast<double>(exploded) > max_fraction * static_cast<double>(batch.size())) {
        throw Error(ErrorCode::ExplosionBudgetExceeded,
                    std::to_string(exploded) + " of " + std::to_string(batch.size()) + " paths exploded");
    }
}

}  // namespace hpsfde
