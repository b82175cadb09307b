#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hpsfde/integrator.hpp"
#include "hpsfde/models.hpp"
#include "hpsfde/paths.hpp"

namespace hpsfde {

/// coeff * exp(time_rate * t) * |x|^power, power a nonnegative even integer.
struct LyapunovTerm {
    double coeff = 1.0;
    int power = 2;
    double time_rate = 0.0;
};

/// Regime-indexed family V(x, t, i) = sum of LyapunovTerm, together with the
/// comparison powers of U_0 = |x|^u0_power and U_k = |x|^u_powers[k-1].
struct LyapunovFamily {
    std::vector<std::vector<LyapunovTerm>> per_regime;
    int u0_power = 2;
    std::vector<int> u_powers;

    [[nodiscard]] int regimes() const noexcept { return static_cast<int>(per_regime.size()); }
    /// Throws InvalidArgument on odd or negative powers or negative coefficients.
    void validate() const;

    [[nodiscard]] double value(std::span<const double> x, double t, int regime) const;
    [[nodiscard]] double time_derivative(std::span<const double> x, double t, int regime) const;
    void gradient(std::span<const double> x, double t, int regime, std::span<double> out) const;
    /// Row-major n x n.
    void hessian(std::span<const double> x, double t, int regime, std::span<double> out) const;
};

/// Components of LV(phi, t, i).
struct LVBreakdown {
    double time_term = 0.0;
    double drift_term = 0.0;
    double diffusion_term = 0.0;
    double switching_term = 0.0;
    double value = 0.0;
};

/// Evaluates the generator applied to V with reusable scratch space.
/// Not safe for concurrent use.
class LVEvaluator {
public:
    LVEvaluator(const LyapunovFamily& family, const ModelSpec& model);

    LVBreakdown operator()(const SegmentView& view, double t, int regime);

private:
    const LyapunovFamily* family_;
    const ModelSpec* model_;
    ModelEvaluator eval_;
    std::vector<double> x_, f_, g_, grad_, hess_;
};

LVBreakdown eval_LV(const LyapunovFamily& family, const ModelSpec& model, const SegmentView& view, double t,
                    int regime);

/// Monte Carlo check of E V(x(t_end)) - E V(x(t0)) = E int LV ds.
struct MartingaleResidual {
    double residual = 0.0;
    double standard_error = 0.0;
    double z = 0.0;
    double mean_integral_lv = 0.0;
    double mean_v_start = 0.0;
    double mean_v_end = 0.0;
    double dt = 0.0;
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;

    /// Allowance for the O(dt) discretization bias: factor * dt * |E int LV|.
    [[nodiscard]] double bias_allowance(double factor = 5.0) const noexcept;
    /// |residual| <= k_sigma * standard_error + bias_allowance(bias_factor).
    [[nodiscard]] bool passes(double k_sigma = 3.0, double bias_factor = 5.0) const noexcept;
};

/// Per path: V(end) - V(start) - trapezoid rule for int LV on the stored grid,
/// using the regime of each step at both of its endpoints. Paths exploded
/// before t_end are excluded. Throws InsufficientPaths below 100 used paths.
MartingaleResidual martingale_residual(const LyapunovFamily& family, const SimulationBatch& batch, double t_end,
                                       int workers = 0);

/// Lower and upper comparison of V against U_0 and U_k on sample points.
struct SandwichReport {
    bool lower_holds = true;
    bool upper_holds = true;
    /// Largest observed V / (U_0 + sum_k U_k) and smallest V / U_0 ratios.
    double max_upper_ratio = 0.0;
    double min_lower_ratio = 0.0;
};

/// Checks U_0(x) <= V(x, t, i) and V(x, t, i) <= sum_k U_k(x) over the
/// scalar radii `radii` and times `times`. Reports, never throws.
SandwichReport check_sandwich(const LyapunovFamily& family, std::span<const double> radii,
                              std::span<const double> times);

LyapunovFamily preset_lyapunov(Preset p);

}  // namespace hpsfde
