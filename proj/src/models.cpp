#include "hpsfde/models.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hpsfde/error.hpp"
#include "hpsfde/random.hpp"

namespace hpsfde {

namespace {

constexpr double kMassTolerance = 1e-12;

bool is_integer(double p) { return std::floor(p) == p; }

double power_of(double x, double p, bool absolute) {
    if (absolute) return p == 0.0 ? 1.0 : std::pow(std::abs(x), p);
    if (p == 1.0) return x;
    return std::pow(x, p);
}

double euclid(std::span<const double> x) {
    if (x.size() == 1) return std::abs(x[0]);
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Measure

Measure Measure::atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) throw Error(ErrorCode::UnsupportedMeasure, "atom measure needs at least one atom");
    Measure m;
    m.kind_ = Kind::Atoms;
    m.atoms_ = std::move(atoms);
    std::sort(m.atoms_.begin(), m.atoms_.end(), [](const Atom& a, const Atom& b) { return a.theta < b.theta; });
    m.build_nodes();
    return m;
}

Measure Measure::piecewise_density(std::vector<double> breakpoints, std::vector<double> densities, int intervals) {
    if (breakpoints.size() < 2 || densities.size() + 1 != breakpoints.size()) {
        throw Error(ErrorCode::UnsupportedMeasure, "density needs k+1 breakpoints for k pieces");
    }
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        if (!(breakpoints[k] < breakpoints[k + 1])) {
            throw Error(ErrorCode::UnsupportedMeasure, "density breakpoints must increase");
        }
        if (densities[k] < 0.0) throw Error(ErrorCode::UnsupportedMeasure, "density must be nonnegative");
    }
    if (intervals < 2) throw Error(ErrorCode::QuadratureUnsupported, "need at least two quadrature intervals");
    Measure m;
    m.kind_ = Kind::PiecewiseDensity;
    m.breakpoints_ = std::move(breakpoints);
    m.densities_ = std::move(densities);
    m.intervals_ = intervals + (intervals % 2);  // Simpson needs an even count
    m.build_nodes();
    return m;
}

void Measure::build_nodes() {
    nodes_.clear();
    if (kind_ == Kind::Atoms) {
        for (const auto& a : atoms_) nodes_.push_back({a.theta, a.weight});
        return;
    }
    for (std::size_t piece = 0; piece < densities_.size(); ++piece) {
        const double a = breakpoints_[piece];
        const double b = breakpoints_[piece + 1];
        const double h = (b - a) / intervals_;
        const double rho = densities_[piece];
        for (int j = 0; j <= intervals_; ++j) {
            const double w = (j == 0 || j == intervals_) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            const double theta = j == intervals_ ? b : a + h * j;
            const double weight = rho * h * w / 3.0;
            if (j == 0 && !nodes_.empty() && nodes_.back().theta == theta) {
                nodes_.back().weight += weight;
            } else {
                nodes_.push_back({theta, weight});
            }
        }
    }
}

double Measure::total_mass() const noexcept {
    if (kind_ == Kind::Atoms) {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight;
        return s;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < densities_.size(); ++k) s += densities_[k] * (breakpoints_[k + 1] - breakpoints_[k]);
    return s;
}

double Measure::support_min() const noexcept {
    return kind_ == Kind::Atoms ? atoms_.front().theta : breakpoints_.front();
}

double Measure::support_max() const noexcept {
    return kind_ == Kind::Atoms ? atoms_.back().theta : breakpoints_.back();
}

Measure Measure::refined(int intervals) const {
    if (kind_ == Kind::Atoms) return *this;
    return piecewise_density(breakpoints_, densities_, intervals);
}

void Measure::validate(double theta_lower) const {
    const double mass = total_mass();
    if (std::abs(mass - 1.0) > kMassTolerance) {
        std::ostringstream os;
        os << "measure mass " << mass << " != 1";
        throw Error(ErrorCode::UnsupportedMeasure, os.str());
    }
    if (kind_ == Kind::Atoms) {
        for (const auto& a : atoms_) {
            if (a.weight < 0.0) throw Error(ErrorCode::UnsupportedMeasure, "negative atom weight");
        }
    }
    if (support_min() < theta_lower - 1e-15 || support_max() > 1.0 + 1e-15) {
        std::ostringstream os;
        os << "measure support [" << support_min() << ", " << support_max() << "] not inside [" << theta_lower
           << ", 1]";
        throw Error(ErrorCode::UnsupportedMeasure, os.str());
    }
}

// ---------------------------------------------------------------------------
// Kernel

double Kernel::factor(double theta, double t) const noexcept { return std::exp(-rate * (1.0 - theta) * t); }

void Kernel::validate(double theta_lower) const {
    if (beta < 0.0) throw Error(ErrorCode::InvalidArgument, "kernel beta must be nonnegative");
    constexpr int kGrid = 16;
    for (int i = 0; i <= kGrid; ++i) {
        const double theta = theta_lower + (1.0 - theta_lower) * i / kGrid;
        for (double u : {0.0, 0.5, 1.0, 10.0, 100.0, 1e4}) {
            if (lambda_at(theta, u) < beta * (1.0 - theta) - 1e-15) {
                std::ostringstream os;
                os << "lambda(" << theta << ", " << u << ") < beta (1 - theta)";
                throw Error(ErrorCode::InvalidArgument, os.str());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// InitialSegment

std::vector<double> InitialSegment::at(double t) const {
    if (!tabulated()) return constant;
    if (t <= table_times.front()) return table_values.front();
    if (t >= table_times.back()) return table_values.back();
    const auto it = std::upper_bound(table_times.begin(), table_times.end(), t);
    const auto k = static_cast<std::size_t>(it - table_times.begin()) - 1;
    const double w = (t - table_times[k]) / (table_times[k + 1] - table_times[k]);
    std::vector<double> out(table_values[k].size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = table_values[k][j] + w * (table_values[k + 1][j] - table_values[k][j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ModelSpec

void ModelSpec::validate() const {
    if (dim < 1 || brownian_dim < 1) throw Error(ErrorCode::InvalidArgument, "dimensions must be positive");
    if (!(theta_lower > 0.0 && theta_lower < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "theta_lower must lie in (0, 1)");
    }
    if (!(t0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "t0 must be positive");
    const auto n = static_cast<std::size_t>(regimes());
    if (drift.size() != n || diffusion.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "drift and diffusion lists required for every regime");
    }
    for (const auto& m : measures) m.validate(theta_lower);
    for (const auto& k : kernels) k.validate(theta_lower);

    auto check_terms = [&](const std::vector<CoefficientTerm>& terms, bool is_diffusion) {
        for (const auto& term : terms) {
            if (is_diffusion && (term.column < 0 || term.column >= brownian_dim)) {
                throw Error(ErrorCode::DimensionMismatch, "diffusion column out of range");
            }
            if (const auto* poly = std::get_if<PointPolynomialTerm>(&term.body)) {
                for (const auto& mono : poly->monomials) {
                    if (mono.power < 0.0) throw Error(ErrorCode::InvalidArgument, "negative power");
                    if (dim > 1 && mono.power > 1.0) {
                        throw Error(ErrorCode::DimensionMismatch, "powers > 1 are only defined for scalar states");
                    }
                    if (!mono.absolute && !is_integer(mono.power)) {
                        throw Error(ErrorCode::InvalidArgument, "signed monomials need integer powers");
                    }
                }
            } else if (const auto* pan = std::get_if<PantographTerm>(&term.body)) {
                if (pan->measure < 0 || pan->measure >= static_cast<int>(measures.size())) {
                    throw Error(ErrorCode::QuadratureUnsupported, "pantograph term references unknown measure");
                }
                if (pan->kernel >= static_cast<int>(kernels.size())) {
                    throw Error(ErrorCode::InvalidArgument, "pantograph term references unknown kernel");
                }
                if (pan->point_exponent < 0.0 || pan->delay_exponent < 0.0) {
                    throw Error(ErrorCode::InvalidArgument, "negative exponent");
                }
                if (dim > 1 && pan->delay_exponent != 1.0) {
                    throw Error(ErrorCode::DimensionMismatch, "delay exponents != 1 need scalar states");
                }
                if (pan->signed_delay && !is_integer(pan->delay_exponent)) {
                    throw Error(ErrorCode::InvalidArgument, "signed delay factor needs an integer exponent");
                }
            } else if (!std::get<CustomTerm>(term.body).fn) {
                throw Error(ErrorCode::InvalidArgument, "custom term without a function");
            }
        }
    };
    for (const auto& terms : drift) check_terms(terms, false);
    for (const auto& terms : diffusion) check_terms(terms, true);

    if (initial_segment.tabulated()) {
        const auto& ts = initial_segment.table_times;
        if (ts.size() != initial_segment.table_values.size() || ts.size() < 2) {
            throw Error(ErrorCode::InvalidArgument, "tabulated initial segment needs matching times/values");
        }
        if (ts.front() > theta_lower * t0 + 1e-12 || ts.back() < t0 - 1e-12) {
            throw Error(ErrorCode::InvalidArgument, "tabulated initial segment must cover [theta_lower t0, t0]");
        }
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (k > 0 && !(ts[k] > ts[k - 1])) throw Error(ErrorCode::InvalidArgument, "xi times must increase");
            if (static_cast<int>(initial_segment.table_values[k].size()) != dim) {
                throw Error(ErrorCode::DimensionMismatch, "xi value size != dim");
            }
        }
    } else if (static_cast<int>(initial_segment.constant.size()) != dim) {
        throw Error(ErrorCode::DimensionMismatch, "xi value size != dim");
    }
}

bool ModelSpec::certifiable() const {
    auto none_custom = [](const std::vector<std::vector<CoefficientTerm>>& lists) {
        for (const auto& terms : lists) {
            for (const auto& t : terms) {
                if (std::holds_alternative<CustomTerm>(t.body)) return false;
            }
        }
        return true;
    };
    return none_custom(drift) && none_custom(diffusion);
}

// ---------------------------------------------------------------------------
// ModelEvaluator

ModelEvaluator::ModelEvaluator(const ModelSpec& model)
    : model_(&model),
      phi1_(static_cast<std::size_t>(model.dim)),
      scratch_(static_cast<std::size_t>(model.dim)),
      samples_(model.measures.size()),
      sampled_(model.measures.size(), 0),
      factors_(model.measures.size() * model.kernels.size()),
      factor_ready_(model.measures.size() * model.kernels.size(), 0) {}

void ModelEvaluator::begin(const SegmentView& view, double t, int regime) {
    if (view.dim() != model_->dim) throw Error(ErrorCode::DimensionMismatch, "segment dim != model dim");
    if (regime < 1 || regime > model_->regimes()) throw Error(ErrorCode::InvalidArgument, "regime out of range");
    view_ = &view;
    t_ = t;
    view.current(phi1_);
    phi1_norm_ = euclid(phi1_);
    std::fill(sampled_.begin(), sampled_.end(), 0);
    std::fill(factor_ready_.begin(), factor_ready_.end(), 0);
}

const std::vector<double>& ModelEvaluator::samples(int measure) {
    auto& buf = samples_[static_cast<std::size_t>(measure)];
    if (!sampled_[static_cast<std::size_t>(measure)]) {
        const auto& nodes = model_->measures[static_cast<std::size_t>(measure)].nodes();
        const auto d = static_cast<std::size_t>(model_->dim);
        buf.resize(nodes.size() * d);
        const double anchor = view_->anchor();
        const DensePath& path = view_->path();
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double lookup = nodes[j].theta * anchor;
            assert(lookup <= anchor);
            if (d == 1) {
                buf[j] = path.eval_scalar(lookup);
            } else {
                path.eval(lookup, std::span<double>(buf.data() + j * d, d));
            }
        }
        sampled_[static_cast<std::size_t>(measure)] = 1;
    }
    return buf;
}

const std::vector<double>& ModelEvaluator::factors(int kernel, int measure) {
    const std::size_t key = static_cast<std::size_t>(kernel) * model_->measures.size() + static_cast<std::size_t>(measure);
    auto& buf = factors_[key];
    if (!factor_ready_[key]) {
        const auto& nodes = model_->measures[static_cast<std::size_t>(measure)].nodes();
        const auto& k = model_->kernels[static_cast<std::size_t>(kernel)];
        buf.resize(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) buf[j] = nodes[j].weight * k.factor(nodes[j].theta, t_);
        factor_ready_[key] = 1;
    }
    return buf;
}

void ModelEvaluator::accumulate(const CoefficientTerm& term, const SegmentView& view, double t,
                                std::span<double> out) {
    const auto d = static_cast<std::size_t>(model_->dim);
    if (const auto* poly = std::get_if<PointPolynomialTerm>(&term.body)) {
        for (std::size_t i = 0; i < d; ++i) {
            double v = 0.0;
            for (const auto& mono : poly->monomials) v += mono.coeff * power_of(phi1_[i], mono.power, mono.absolute);
            out[i] += v;
        }
        return;
    }
    if (const auto* pan = std::get_if<PantographTerm>(&term.body)) {
        const auto& measure = model_->measures[static_cast<std::size_t>(pan->measure)];
        const auto& nodes = measure.nodes();
        const auto& phi = samples(pan->measure);
        const double point = pan->point_exponent == 0.0 ? 1.0 : std::pow(phi1_norm_, pan->point_exponent);
        const double scale = pan->coeff * point;
        if (scale == 0.0) return;
        const double* w = nullptr;
        if (pan->kernel >= 0) w = factors(pan->kernel, pan->measure).data();
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                const double y = phi[j * d + i];
                const double fy = pan->delay_exponent == 1.0
                                      ? (pan->signed_delay ? y : std::abs(y))
                                      : power_of(y, pan->delay_exponent, !pan->signed_delay);
                acc += (w ? w[j] : nodes[j].weight) * fy;
            }
            out[i] += scale * acc;
        }
        return;
    }
    const auto& custom = std::get<CustomTerm>(term.body);
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    custom.fn(view, t, scratch_);
    for (std::size_t i = 0; i < d; ++i) out[i] += scratch_[i];
}

void ModelEvaluator::drift_and_diffusion(const SegmentView& view, double t, int regime, std::span<double> f,
                                         std::span<double> g) {
    const auto d = static_cast<std::size_t>(model_->dim);
    const auto m = static_cast<std::size_t>(model_->brownian_dim);
    if (f.size() != d || g.size() != d * m) throw Error(ErrorCode::DimensionMismatch, "output buffer size");
    begin(view, t, regime);
    std::fill(f.begin(), f.end(), 0.0);
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& term : model_->drift[static_cast<std::size_t>(regime - 1)]) accumulate(term, view, t, f);
    for (const auto& term : model_->diffusion[static_cast<std::size_t>(regime - 1)]) {
        if (m == 1) {
            accumulate(term, view, t, g);
            continue;
        }
        column_.assign(d, 0.0);
        accumulate(term, view, t, column_);
        for (std::size_t i = 0; i < d; ++i) g[i * m + static_cast<std::size_t>(term.column)] += column_[i];
    }
}

void ModelEvaluator::drift(const SegmentView& view, double t, int regime, std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(model_->dim)) {
        throw Error(ErrorCode::DimensionMismatch, "output buffer size");
    }
    begin(view, t, regime);
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& term : model_->drift[static_cast<std::size_t>(regime - 1)]) accumulate(term, view, t, out);
}

void ModelEvaluator::diffusion(const SegmentView& view, double t, int regime, std::span<double> out) {
    std::vector<double> f(static_cast<std::size_t>(model_->dim));
    drift_and_diffusion(view, t, regime, f, out);
}

std::vector<double> eval_drift(const ModelSpec& model, const SegmentView& view, double t, int regime) {
    ModelEvaluator ev(model);
    std::vector<double> out(static_cast<std::size_t>(model.dim));
    ev.drift(view, t, regime, out);
    return out;
}

std::vector<double> eval_diffusion(const ModelSpec& model, const SegmentView& view, double t, int regime) {
    ModelEvaluator ev(model);
    std::vector<double> out(static_cast<std::size_t>(model.dim * model.brownian_dim));
    ev.diffusion(view, t, regime, out);
    return out;
}

// ---------------------------------------------------------------------------
// Presets

std::optional<Preset> parse_preset(std::string_view name) {
    if (name == "example_3_4") return Preset::Example34;
    if (name == "example_3_5") return Preset::Example35;
    if (name == "example_3_7") return Preset::Example37;
    return std::nullopt;
}

std::string_view preset_name(Preset p) {
    switch (p) {
        case Preset::Example34: return "example_3_4";
        case Preset::Example35: return "example_3_5";
        case Preset::Example37: return "example_3_7";
    }
    return "";
}

double preset_theta_lower(Preset p) {
    switch (p) {
        case Preset::Example34: return 0.5;
        case Preset::Example35: return 0.7;
        case Preset::Example37: return 0.75;
    }
    return 0.5;
}

namespace {

CoefficientTerm poly(std::vector<Monomial> monos) { return {PointPolynomialTerm{std::move(monos)}, 0}; }

CoefficientTerm pantograph(double c, int measure, int kernel, double m1, double m2, bool signed_delay) {
    return {PantographTerm{c, measure, kernel, m1, m2, signed_delay}, 0};
}

}  // namespace

ModelSpec preset(Preset p, const Measure& nu, double t0, double xi) {
    ModelSpec m;
    m.name = std::string(preset_name(p));
    m.dim = 1;
    m.brownian_dim = 1;
    m.theta_lower = preset_theta_lower(p);
    m.t0 = t0;
    m.initial_segment = InitialSegment::constant_value({xi});
    try {
        nu.validate(m.theta_lower);
    } catch (const Error& e) {
        throw Error(ErrorCode::UnsupportedMeasure, std::string(preset_name(p)) + ": " + e.what());
    }

    switch (p) {
        case Preset::Example34: {
            // f(.,1) = -5(x + x^3 + x^5) + 0.5 int e^{-0.5(1-th)t} |phi(th)| dnu
            // f(.,2) = 0.05 x + 0.05 int e^{-0.5(1-th)t} |phi(th)| dnu
            // g(.,1) = 0.5 int e^{-0.5(1-th)t} |phi(1)|^2 |phi(th)| dnu
            // g(.,2) = 0.2 int e^{-0.5(1-th)t} |phi(th)| dnu
            m.generator = GeneratorMatrix({{-1.0, 1.0}, {2.0, -2.0}});
            m.measures = {nu};
            m.kernels = {Kernel::linear(0.5)};
            m.drift = {{poly({{-5.0, 1.0}, {-5.0, 3.0}, {-5.0, 5.0}}), pantograph(0.5, 0, 0, 0.0, 1.0, false)},
                       {poly({{0.05, 1.0}}), pantograph(0.05, 0, 0, 0.0, 1.0, false)}};
            m.diffusion = {{pantograph(0.5, 0, 0, 2.0, 1.0, false)}, {pantograph(0.2, 0, 0, 0.0, 1.0, false)}};
            break;
        }
        case Preset::Example35: {
            // f(.,1) = -6(x + x^3 + x^7) + int e^{-0.6(1-th)t} phi(th) dnu1
            // f(.,2) = 0.04 x + 0.04 int e^{-0.6(1-th)t} phi(th) dnu2,  nu2 = delta_1
            // g(.,1) = 0.5 int e^{-0.6(1-th)t} |phi(1)|^2 |phi(th)|^2 dnu1
            // g(.,2) = 0.1 int e^{-0.6(1-th)t} phi(th) dnu2
            m.generator = GeneratorMatrix({{-1.0, 1.0}, {3.0, -3.0}});
            m.measures = {nu, Measure::dirac(1.0)};
            m.kernels = {Kernel::linear(0.6)};
            m.drift = {{poly({{-6.0, 1.0}, {-6.0, 3.0}, {-6.0, 7.0}}), pantograph(1.0, 0, 0, 0.0, 1.0, true)},
                       {poly({{0.04, 1.0}}), pantograph(0.04, 1, 0, 0.0, 1.0, true)}};
            m.diffusion = {{pantograph(0.5, 0, 0, 2.0, 2.0, false)}, {pantograph(0.1, 1, 0, 0.0, 1.0, true)}};
            break;
        }
        case Preset::Example37: {
            // f(.,1) = -6(x + x^3 + x^7) + 0.5 int phi(th) dnu1
            // f(.,2) = 0.04 x + 0.03 int phi(th) dnu2,  nu2 = delta_1
            // g(.,1) = 0.2 int |phi(1)|^1.5 |phi(th)|^2.5 dnu1
            // g(.,2) = 0.1 int |phi(th)| dnu2
            m.generator = GeneratorMatrix({{-1.0, 1.0}, {4.0, -4.0}});
            m.measures = {nu, Measure::dirac(1.0)};
            m.drift = {{poly({{-6.0, 1.0}, {-6.0, 3.0}, {-6.0, 7.0}}), pantograph(0.5, 0, -1, 0.0, 1.0, true)},
                       {poly({{0.04, 1.0}}), pantograph(0.03, 1, -1, 0.0, 1.0, true)}};
            m.diffusion = {{pantograph(0.2, 0, -1, 1.5, 2.5, false)}, {pantograph(0.1, 1, -1, 0.0, 1.0, false)}};
            break;
        }
    }
    m.validate();
    return m;
}

ModelSpec preset(Preset p, double t0, double xi) {
    return preset(p, Measure::uniform(preset_theta_lower(p), 1.0), t0, xi);
}

ModelSpec subsystem(const ModelSpec& model, int regime) {
    if (regime < 1 || regime > model.regimes()) throw Error(ErrorCode::InvalidArgument, "regime out of range");
    ModelSpec sub = model;
    sub.name = model.name + "/regime_" + std::to_string(regime);
    sub.generator = GeneratorMatrix(std::vector<std::vector<double>>{{0.0}});
    sub.drift = {model.drift[static_cast<std::size_t>(regime - 1)]};
    sub.diffusion = {model.diffusion[static_cast<std::size_t>(regime - 1)]};
    return sub;
}

// ---------------------------------------------------------------------------
// Local Lipschitz probe

LipschitzProbeReport validate_local_lipschitz_probe(const ModelSpec& model, double radius, int trials,
                                                    std::uint64_t seed) {
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "probe radius must be positive");
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "probe needs at least one trial");
    model.validate();

    LipschitzProbeReport report;
    report.radius = radius;
    report.trials = trials;
    report.max_ratio_per_regime.assign(static_cast<std::size_t>(model.regimes()), 0.0);

    constexpr int kKnots = 9;
    const auto d = static_cast<std::size_t>(model.dim);
    const double lo = model.theta_lower * model.t0;
    const double hi = model.t0;
    Engine engine = stream_engine(seed, StreamKind::Brownian);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> log_scale(-8.0, 0.0);
    std::uniform_real_distribution<double> log_delta(-7.0, 0.0);

    ModelEvaluator ev(model);
    const auto m = static_cast<std::size_t>(model.brownian_dim);
    std::vector<double> f_a(d), f_b(d), g_a(d * m), g_b(d * m);
    std::vector<double> xa(d), xb(d);

    for (int trial = 0; trial < trials; ++trial) {
        const double base_scale = radius * std::pow(10.0, log_scale(engine));
        const double delta_scale = radius * std::pow(10.0, log_delta(engine));
        DensePath pa(model.dim, model.theta_lower, model.t0);
        DensePath pb(model.dim, model.theta_lower, model.t0);
        double diff_norm = 0.0;
        for (int k = 0; k < kKnots; ++k) {
            const double t = k + 1 == kKnots ? hi : lo + (hi - lo) * k / (kKnots - 1);
            double na = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                xa[i] = base_scale * unit(engine) / std::sqrt(static_cast<double>(d));
                xb[i] = xa[i] + delta_scale * unit(engine) / std::sqrt(static_cast<double>(d));
                na += xb[i] * xb[i];
            }
            // keep phi' inside the ball
            const double nb = std::sqrt(na);
            if (nb > radius) {
                for (auto& v : xb) v *= radius / nb;
            }
            double dn = 0.0;
            for (std::size_t i = 0; i < d; ++i) dn += (xa[i] - xb[i]) * (xa[i] - xb[i]);
            diff_norm = std::max(diff_norm, std::sqrt(dn));
            pa.append(t, xa, 0);
            pb.append(t, xb, 0);
        }
        if (diff_norm == 0.0) continue;
        const SegmentView va(pa, hi);
        const SegmentView vb(pb, hi);
        for (int regime = 1; regime <= model.regimes(); ++regime) {
            ev.drift_and_diffusion(va, hi, regime, f_a, g_a);
            ev.drift_and_diffusion(vb, hi, regime, f_b, g_b);
            double df = 0.0;
            double dg = 0.0;
            for (std::size_t i = 0; i < d; ++i) df += (f_a[i] - f_b[i]) * (f_a[i] - f_b[i]);
            for (std::size_t i = 0; i < d * m; ++i) dg += (g_a[i] - g_b[i]) * (g_a[i] - g_b[i]);
            const double ratio = std::max(std::sqrt(df), std::sqrt(dg)) / diff_norm;
            auto& slot = report.max_ratio_per_regime[static_cast<std::size_t>(regime - 1)];
            slot = std::max(slot, ratio);
            report.max_ratio = std::max(report.max_ratio, ratio);
            if (diff_norm <= 1e-4 * radius) report.max_ratio_fine = std::max(report.max_ratio_fine, ratio);
            if (diff_norm >= 1e-2 * radius) report.max_ratio_coarse = std::max(report.max_ratio_coarse, ratio);
        }
    }
    report.suspect_non_lipschitz = report.max_ratio_fine > 100.0 * std::max(report.max_ratio_coarse, 1e-300);
    return report;
}

}  // namespace hpsfde
