#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hpsfde/markov.hpp"
#include "hpsfde/models.hpp"
#include "hpsfde/paths.hpp"

namespace hpsfde {

struct IntegratorConfig {
    double dt = 1e-3;
    double T = 2.0;
    double blowup_threshold = 1e8;
    int brownian_dim = 1;

    /// dt > 0, T > t0, brownian_dim matches the model.
    void validate(const ModelSpec& model) const;
};

enum class PathOutcome { Completed, BlowUp, NonFinite };

struct PathResult {
    DensePath path;
    RegimePath regimes;
    PathOutcome outcome = PathOutcome::Completed;
    std::uint64_t seed = 0;

    [[nodiscard]] bool exploded() const noexcept { return outcome != PathOutcome::Completed; }
};

/// Supplies the Brownian increment for step `step` over [s, s + h].
using IncrementSource = std::function<void(std::size_t step, double s, double h, std::span<double> dB)>;

/// Uniform points t0 + k dt (last point clamped to T).
std::vector<double> uniform_grid(double t0, double T, double dt);

/// Uniform grid merged with the regime switch times. Switch times closer than
/// 1e-12 (relative) to a uniform point are snapped onto it.
std::vector<double> integration_grid(double t0, double T, double dt, const RegimePath& regimes);

/// Euler-Maruyama along a given regime path with caller-supplied increments.
/// Step k uses the segment frozen at the left endpoint s_k and the regime in
/// force on [s_k, s_k+1); switch times are grid points so no step straddles a switch.
PathResult integrate_along(const ModelSpec& model, const IntegratorConfig& cfg, RegimePath regimes,
                           const IncrementSource& increments);

/// Samples the regime path and Gaussian increments from the streams derived
/// from `seed`. Increments are drawn step by step, brownian_dim standard
/// normals per step scaled by sqrt(h), in grid order.
PathResult integrate_path(const ModelSpec& model, const IntegratorConfig& cfg, int i0, std::uint64_t seed);

struct SimulationBatch {
    ModelSpec model;
    IntegratorConfig config;
    int initial_regime = 1;
    std::uint64_t root_seed = 0;
    std::vector<PathResult> results;

    [[nodiscard]] std::size_t size() const noexcept { return results.size(); }
    [[nodiscard]] std::size_t exploded_count() const noexcept;
    /// The uniform grid shared by every path.
    [[nodiscard]] std::vector<double> shared_grid() const;
};

/// n_paths independent paths; path i uses path_seed(root_seed, i). Output is
/// identical for any worker count (0 = hardware concurrency).
SimulationBatch run_batch(const ModelSpec& model, const IntegratorConfig& cfg, std::size_t n_paths, int i0,
                          std::uint64_t root_seed, int workers = 0);

/// Runs fn(i) for i in [0, n) on `workers` threads (0 = hardware concurrency).
/// Exceptions are rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace hpsfde
