#include "hpsfde/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "hpsfde/error.hpp"
#include "hpsfde/random.hpp"

namespace hpsfde {

void IntegratorConfig::validate(const ModelSpec& model) const {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    if (!(T > model.t0)) throw Error(ErrorCode::InvalidArgument, "horizon T must exceed t0");
    if (!(blowup_threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "blow-up threshold must be positive");
    if (brownian_dim != model.brownian_dim) {
        throw Error(ErrorCode::DimensionMismatch, "config brownian_dim differs from the model");
    }
}

std::vector<double> uniform_grid(double t0, double T, double dt) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil((T - t0) / dt - 1e-9)));
    std::vector<double> grid(steps + 1);
    for (std::size_t k = 0; k < steps; ++k) grid[k] = t0 + static_cast<double>(k) * dt;
    grid[steps] = T;
    return grid;
}

std::vector<double> integration_grid(double t0, double T, double dt, const RegimePath& regimes) {
    const std::vector<double> base = uniform_grid(t0, T, dt);
    std::vector<double> grid;
    grid.reserve(base.size() + regimes.jump_times.size());
    std::size_t j = 0;
    const auto& jumps = regimes.jump_times;
    for (std::size_t k = 0; k < base.size(); ++k) {
        while (j < jumps.size() && jumps[j] < base[k]) {
            const double tol = 1e-12 * std::max(1.0, std::abs(base[k]));
            const bool near_prev = k > 0 && jumps[j] - base[k - 1] <= tol;
            const bool near_next = base[k] - jumps[j] <= tol;
            if (!near_prev && !near_next) grid.push_back(jumps[j]);
            ++j;
        }
        grid.push_back(base[k]);
    }
    return grid;
}

namespace {

int regime_on(const RegimePath& regimes, double t) {
    // right-continuous lookup tolerant to snapped switch times
    const auto& jumps = regimes.jump_times;
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    const auto it = std::upper_bound(jumps.begin(), jumps.end(), t + tol);
    return regimes.states[static_cast<std::size_t>(it - jumps.begin())];
}

}  // namespace

PathResult integrate_along(const ModelSpec& model, const IntegratorConfig& cfg, RegimePath regimes,
                           const IncrementSource& increments) {
    cfg.validate(model);
    const std::vector<double> grid = integration_grid(model.t0, cfg.T, cfg.dt, regimes);
    const auto d = static_cast<std::size_t>(model.dim);
    const auto m = static_cast<std::size_t>(model.brownian_dim);

    PathResult result;
    result.path = DensePath(model.dim, model.theta_lower, model.t0, cfg.dt);
    DensePath& path = result.path;

    // Initial segment on [theta_lower t0, t0].
    const double start = model.theta_lower * model.t0;
    const auto& xi = model.initial_segment;
    std::size_t initial_points = 2;
    if (xi.tabulated()) {
        for (double t : xi.table_times) initial_points += (t > start && t < model.t0) ? 1 : 0;
    }
    path.reserve(grid.size() + initial_points);
    path.append(start, xi.at(start), 0);
    if (xi.tabulated()) {
        for (std::size_t k = 0; k < xi.table_times.size(); ++k) {
            const double t = xi.table_times[k];
            if (t > start && t < model.t0) path.append(t, xi.table_values[k], 0);
        }
    }

    std::vector<double> x = xi.at(model.t0);
    std::vector<double> f(d), g(d * m), db(m);
    int regime = regime_on(regimes, grid.front());
    path.append(grid.front(), x, regime);

    ModelEvaluator evaluator(model);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double s = grid[k];
        const double h = grid[k + 1] - s;
        const SegmentView view(path, s);
        evaluator.drift_and_diffusion(view, s, regime, f, g);
        increments(k, s, h, db);

        double norm2 = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < d; ++i) {
            double dx = f[i] * h;
            for (std::size_t j = 0; j < m; ++j) dx += g[i * m + j] * db[j];
            x[i] += dx;
            finite = finite && std::isfinite(x[i]);
            norm2 += x[i] * x[i];
        }
        const double next_t = grid[k + 1];
        if (!finite) {
            result.outcome = PathOutcome::NonFinite;
            path.mark_exploded(next_t);
            break;
        }
        if (std::sqrt(norm2) > cfg.blowup_threshold) {
            result.outcome = PathOutcome::BlowUp;
            path.mark_exploded(next_t);
            break;
        }
        regime = k + 2 < grid.size() ? regime_on(regimes, next_t) : regimes.final_state();
        path.append(next_t, x, regime);
    }
    result.regimes = std::move(regimes);
    return result;
}

PathResult integrate_path(const ModelSpec& model, const IntegratorConfig& cfg, int i0, std::uint64_t seed) {
    cfg.validate(model);
    RegimePath regimes = sample_regime_path(model.generator, i0, model.t0, cfg.T, seed);
    Engine engine = stream_engine(seed, StreamKind::Brownian);
    std::normal_distribution<double> normal(0.0, 1.0);
    const IncrementSource source = [&](std::size_t, double, double h, std::span<double> db) {
        const double scale = std::sqrt(h);
        for (auto& v : db) v = scale * normal(engine);
    };
    PathResult result = integrate_along(model, cfg, std::move(regimes), source);
    result.seed = seed;
    return result;
}

std::size_t SimulationBatch::exploded_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [](const PathResult& r) { return r.exploded(); }));
}

std::vector<double> SimulationBatch::shared_grid() const { return uniform_grid(model.t0, config.T, config.dt); }

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    std::size_t count = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    count = std::min(count, std::max<std::size_t>(1, n));
    if (count == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

SimulationBatch run_batch(const ModelSpec& model, const IntegratorConfig& cfg, std::size_t n_paths, int i0,
                          std::uint64_t root_seed, int workers) {
    if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "batch needs at least one path");
    model.validate();
    cfg.validate(model);
    if (i0 < 1 || i0 > model.regimes()) throw Error(ErrorCode::InvalidArgument, "initial regime out of range");

    SimulationBatch batch;
    batch.model = model;
    batch.config = cfg;
    batch.initial_regime = i0;
    batch.root_seed = root_seed;
    batch.results.resize(n_paths);
    parallel_for(n_paths, workers, [&](std::size_t i) {
        batch.results[i] = integrate_path(batch.model, cfg, i0, path_seed(root_seed, i));
    });
    return batch;
}

}  // namespace hpsfde
