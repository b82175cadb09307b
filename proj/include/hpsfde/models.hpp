#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hpsfde/markov.hpp"
#include "hpsfde/paths.hpp"

namespace hpsfde {

struct Atom {
    double theta = 1.0;
    double weight = 1.0;
};

struct QuadNode {
    double theta = 1.0;
    double weight = 1.0;
};

/// Probability measure on [theta_lower, 1]: either finitely many atoms or a
/// piecewise-constant density. Integrals against atoms are exact; densities
/// use composite Simpson on `intervals` subintervals per piece.
class Measure {
public:
    enum class Kind { Atoms, PiecewiseDensity };

    static constexpr int kDefaultIntervals = 64;

    static Measure atoms(std::vector<Atom> atoms);
    static Measure dirac(double theta = 1.0) { return atoms({{theta, 1.0}}); }
    /// Density on pieces [breakpoints[k], breakpoints[k+1]) with value densities[k].
    static Measure piecewise_density(std::vector<double> breakpoints, std::vector<double> densities,
                                     int intervals = kDefaultIntervals);
    static Measure uniform(double lo, double hi, int intervals = kDefaultIntervals) {
        return piecewise_density({lo, hi}, {1.0 / (hi - lo)}, intervals);
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<Atom>& atom_list() const noexcept { return atoms_; }
    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    [[nodiscard]] const std::vector<double>& densities() const noexcept { return densities_; }
    [[nodiscard]] int intervals() const noexcept { return intervals_; }
    /// Quadrature nodes, sorted by theta; weights sum to the total mass.
    [[nodiscard]] const std::vector<QuadNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] double total_mass() const noexcept;
    [[nodiscard]] double support_min() const noexcept;
    [[nodiscard]] double support_max() const noexcept;
    /// Same measure with a different subinterval count (densities only).
    [[nodiscard]] Measure refined(int intervals) const;

    /// Throws UnsupportedMeasure unless mass is 1 (1e-12) and support lies in [theta_lower, 1].
    void validate(double theta_lower) const;

    template <class F>
    [[nodiscard]] double integrate(F&& f) const {
        double acc = 0.0;
        for (const auto& node : nodes_) acc += node.weight * f(node.theta);
        return acc;
    }

private:
    Measure() = default;
    void build_nodes();

    Kind kind_ = Kind::Atoms;
    std::vector<Atom> atoms_;
    std::vector<double> breakpoints_;
    std::vector<double> densities_;
    int intervals_ = kDefaultIntervals;
    std::vector<QuadNode> nodes_;
};

/// Decay kernel exp(-int_0^t lambda(theta, u) du) with lambda(theta, u) = rate * (1 - theta).
/// `beta` is the certified lower bound: inf_u lambda(theta, u) >= beta * (1 - theta).
struct Kernel {
    double beta = 0.0;
    double rate = 0.0;

    static Kernel linear(double beta) { return {beta, beta}; }

    [[nodiscard]] double lambda_at(double theta, double /*u*/) const noexcept { return rate * (1.0 - theta); }
    [[nodiscard]] double factor(double theta, double t) const noexcept;
    /// Spot-checks the beta constraint on a theta/u grid; throws InvalidArgument on failure.
    void validate(double theta_lower) const;
};

/// c * x^p (integer p) or c * |x|^p when `absolute`.
struct Monomial {
    double coeff = 0.0;
    double power = 1.0;
    bool absolute = false;
};

/// Sum of monomials applied to phi(1), componentwise.
struct PointPolynomialTerm {
    std::vector<Monomial> monomials;
};

/// coeff * int K(theta, t) |phi(1)|^point_exponent * F(phi(theta)) dnu(theta),
/// with F(y) = y^delay_exponent when signed_delay, |y|^delay_exponent otherwise.
/// kernel < 0 means K == 1.
struct PantographTerm {
    double coeff = 0.0;
    int measure = 0;
    int kernel = -1;
    double point_exponent = 0.0;
    double delay_exponent = 1.0;
    bool signed_delay = false;
};

/// Opaque user hook. Evaluable but never certifiable.
struct CustomTerm {
    std::function<void(const SegmentView&, double, std::span<double>)> fn;
    std::string label;
};

struct CoefficientTerm {
    std::variant<PointPolynomialTerm, PantographTerm, CustomTerm> body;
    /// Brownian column receiving this term (diffusion only).
    int column = 0;
};

/// xi on [theta_lower * t0, t0]: constant, or tabulated and linearly interpolated.
struct InitialSegment {
    std::vector<double> constant;
    std::vector<double> table_times;
    std::vector<std::vector<double>> table_values;

    static InitialSegment constant_value(std::vector<double> value) { return {std::move(value), {}, {}}; }
    [[nodiscard]] bool tabulated() const noexcept { return !table_times.empty(); }
    [[nodiscard]] std::vector<double> at(double t) const;
};

/// dx(t) = f(x_t, t, r(t)) dt + g(x_t, t, r(t)) dB(t), x = xi on [theta_lower t0, t0].
struct ModelSpec {
    std::string name;
    int dim = 1;
    int brownian_dim = 1;
    double theta_lower = 0.5;
    double t0 = 1.0;
    GeneratorMatrix generator{{{0.0}}};
    std::vector<Measure> measures;
    std::vector<Kernel> kernels;
    /// Indexed by regime - 1.
    std::vector<std::vector<CoefficientTerm>> drift;
    std::vector<std::vector<CoefficientTerm>> diffusion;
    InitialSegment initial_segment = InitialSegment::constant_value({0.0});

    [[nodiscard]] int regimes() const noexcept { return generator.size(); }
    /// Structural checks; throws Error on the first violation.
    void validate() const;
    /// True when no CustomTerm appears.
    [[nodiscard]] bool certifiable() const;
};

/// Evaluates f and g with reusable scratch space. One instance per worker;
/// not safe for concurrent use. Pantograph terms sharing a measure sample the
/// segment once per call.
class ModelEvaluator {
public:
    explicit ModelEvaluator(const ModelSpec& model);

    void drift(const SegmentView& view, double t, int regime, std::span<double> out);
    /// Row-major dim x brownian_dim.
    void diffusion(const SegmentView& view, double t, int regime, std::span<double> out);
    void drift_and_diffusion(const SegmentView& view, double t, int regime, std::span<double> f,
                             std::span<double> g);

    [[nodiscard]] const ModelSpec& model() const noexcept { return *model_; }

private:
    void begin(const SegmentView& view, double t, int regime);
    void accumulate(const CoefficientTerm& term, const SegmentView& view, double t, std::span<double> out);
    const std::vector<double>& samples(int measure);
    const std::vector<double>& factors(int kernel, int measure);

    const ModelSpec* model_;
    const SegmentView* view_ = nullptr;
    double t_ = 0.0;
    double phi1_norm_ = 0.0;
    std::vector<double> phi1_;
    std::vector<double> scratch_;
    std::vector<double> column_;
    std::vector<std::vector<double>> samples_;
    std::vector<char> sampled_;
    std::vector<std::vector<double>> factors_;
    std::vector<char> factor_ready_;
};

std::vector<double> eval_drift(const ModelSpec& model, const SegmentView& view, double t, int regime);
/// Row-major dim x brownian_dim.
std::vector<double> eval_diffusion(const ModelSpec& model, const SegmentView& view, double t, int regime);

enum class Preset { Example34, Example35, Example37 };

std::optional<Preset> parse_preset(std::string_view name);
std::string_view preset_name(Preset p);
double preset_theta_lower(Preset p);

/// Fully populated model for one of the built-in examples. `nu` is the
/// generic measure (nu_1); the point-delay measure of the 3.5/3.7 examples is
/// fixed to the Dirac mass at 1. xi is the constant initial segment.
ModelSpec preset(Preset p, const Measure& nu, double t0 = 1.0, double xi = 0.5);
/// Same, with nu uniform on [theta_lower, 1].
ModelSpec preset(Preset p, double t0 = 1.0, double xi = 0.5);

/// Regime `regime` of `model` as a standalone single-regime system.
ModelSpec subsystem(const ModelSpec& model, int regime);

/// Diagnostics from randomized pairs (phi, phi') with ||phi|| v ||phi'|| <= R.
struct LipschitzProbeReport {
    double radius = 0.0;
    int trials = 0;
    double max_ratio = 0.0;
    /// Largest ratio among pairs with ||phi - phi'|| <= 1e-4 R.
    double max_ratio_fine = 0.0;
    /// Largest ratio among pairs with ||phi - phi'|| >= 1e-2 R.
    double max_ratio_coarse = 0.0;
    /// Ratio keeps growing as the perturbation shrinks (fine > 100 x coarse).
    bool suspect_non_lipschitz = false;
    std::vector<double> max_ratio_per_regime;
};

LipschitzProbeReport validate_local_lipschitz_probe(const ModelSpec& model, double radius, int trials,
                                                    std::uint64_t seed);

}  // namespace hpsfde
