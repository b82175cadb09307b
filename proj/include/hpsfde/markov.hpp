#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hpsfde/random.hpp"

namespace hpsfde {

/// Transition-rate matrix of a continuous-time Markov chain on {1, ..., N}.
/// Off-diagonal rates are nonnegative and every row sums to zero (1e-12).
/// Regime indices are 1-based everywhere in the public API.
class GeneratorMatrix {
public:
    static constexpr double kRowSumTolerance = 1e-12;

    /// Validates and stores `rates` (row-major, square).
    explicit GeneratorMatrix(const std::vector<std::vector<double>>& rates);

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] double rate(int i, int j) const { return rates_[index(i, j)]; }
    /// -gamma_ii, the total rate of leaving state i.
    [[nodiscard]] double exit_rate(int i) const { return -rate(i, i); }
    [[nodiscard]] std::vector<std::vector<double>> rows() const;

private:
    [[nodiscard]] std::size_t index(int i, int j) const;

    int n_ = 0;
    std::vector<double> rates_;
};

GeneratorMatrix make_generator(const std::vector<std::vector<double>>& rates);

/// Right-continuous piecewise-constant regime trajectory on [t0, T].
/// states[k] holds on [jump_times[k-1], jump_times[k]) with jump_times[-1] = t0.
struct RegimePath {
    double t0 = 0.0;
    double T = 0.0;
    std::vector<double> jump_times;
    std::vector<int> states;

    [[nodiscard]] int initial_state() const { return states.front(); }
    [[nodiscard]] int final_state() const { return states.back(); }
    [[nodiscard]] std::size_t jump_count() const noexcept { return jump_times.size(); }
    [[nodiscard]] int state_at(double t) const;
    /// Fraction of [t0, T] spent in each state (index 0 is state 1).
    [[nodiscard]] std::vector<double> occupation_fractions(int n_states) const;
};

RegimePath sample_regime_path(const GeneratorMatrix& g, int i0, double t0, double T, Engine& engine);

/// Samples on the Regime stream derived from `seed` (see random.hpp).
RegimePath sample_regime_path(const GeneratorMatrix& g, int i0, double t0, double T,
                              std::uint64_t seed);

/// Probability vector pi with pi * Gamma = 0. Throws ReducibleChain when the
/// left null space has dimension greater than one.
std::vector<double> stationary_distribution(const GeneratorMatrix& g);

}  // namespace hpsfde
