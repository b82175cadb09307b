#include "hpsfde/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpsfde/error.hpp"
#include "hpsfde/stats.hpp"

namespace hpsfde {

namespace {

double squared_norm(std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return r2;
}

// r2^(k) for integer k >= 0.
double ipow(double r2, int k) {
    double out = 1.0;
    for (int i = 0; i < k; ++i) out *= r2;
    return out;
}

const std::vector<LyapunovTerm>& terms_for(const LyapunovFamily& family, int regime) {
    if (regime < 1 || regime > family.regimes()) {
        throw Error(ErrorCode::InvalidArgument, "regime out of range for Lyapunov family");
    }
    return family.per_regime[static_cast<std::size_t>(regime - 1)];
}

}  // namespace

void LyapunovFamily::validate() const {
    if (per_regime.empty()) throw Error(ErrorCode::InvalidArgument, "Lyapunov family has no regimes");
    for (const auto& terms : per_regime) {
        for (const auto& term : terms) {
            if (term.power < 0 || term.power % 2 != 0) {
                throw Error(ErrorCode::InvalidArgument, "Lyapunov powers must be nonnegative even integers");
            }
            if (!(term.coeff >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Lyapunov coefficients must be >= 0");
        }
    }
    if (u0_power <= 0) throw Error(ErrorCode::InvalidArgument, "U_0 power must be positive");
    for (int p : u_powers) {
        if (p <= 0) throw Error(ErrorCode::InvalidArgument, "U_k powers must be positive");
    }
}

double LyapunovFamily::value(std::span<const double> x, double t, int regime) const {
    const double r2 = squared_norm(x);
    double v = 0.0;
    for (const auto& term : terms_for(*this, regime)) {
        v += term.coeff * std::exp(term.time_rate * t) * ipow(r2, term.power / 2);
    }
    return v;
}

double LyapunovFamily::time_derivative(std::span<const double> x, double t, int regime) const {
    const double r2 = squared_norm(x);
    double v = 0.0;
    for (const auto& term : terms_for(*this, regime)) {
        if (term.time_rate == 0.0) continue;
        v += term.time_rate * term.coeff * std::exp(term.time_rate * t) * ipow(r2, term.power / 2);
    }
    return v;
}

void LyapunovFamily::gradient(std::span<const double> x, double t, int regime, std::span<double> out) const {
    const double r2 = squared_norm(x);
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& term : terms_for(*this, regime)) {
        if (term.power == 0) continue;
        const double s = term.coeff * std::exp(term.time_rate * t) * term.power * ipow(r2, term.power / 2 - 1);
        for (std::size_t a = 0; a < x.size(); ++a) out[a] += s * x[a];
    }
}

void LyapunovFamily::hessian(std::span<const double> x, double t, int regime, std::span<double> out) const {
    const std::size_t n = x.size();
    const double r2 = squared_norm(x);
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& term : terms_for(*this, regime)) {
        if (term.power == 0) continue;
        const double c = term.coeff * std::exp(term.time_rate * t);
        const double diag = c * term.power * ipow(r2, term.power / 2 - 1);
        for (std::size_t a = 0; a < n; ++a) out[a * n + a] += diag;
        if (term.power >= 4) {
            const double outer = c * term.power * (term.power - 2) * ipow(r2, term.power / 2 - 2);
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) out[a * n + b] += outer * x[a] * x[b];
            }
        }
    }
}

LVEvaluator::LVEvaluator(const LyapunovFamily& family, const ModelSpec& model)
    : family_(&family), model_(&model), eval_(model) {
    family.validate();
    if (family.regimes() != model.regimes()) {
        throw Error(ErrorCode::DimensionMismatch, "Lyapunov family and model have different regime counts");
    }
    const auto n = static_cast<std::size_t>(model.dim);
    const auto m = static_cast<std::size_t>(model.brownian_dim);
    x_.resize(n);
    f_.resize(n);
    g_.resize(n * m);
    grad_.resize(n);
    hess_.resize(n * n);
}

LVBreakdown LVEvaluator::operator()(const SegmentView& view, double t, int regime) {
    const auto n = static_cast<std::size_t>(model_->dim);
    const auto m = static_cast<std::size_t>(model_->brownian_dim);
    view.current(x_);
    eval_.drift_and_diffusion(view, t, regime, f_, g_);
    family_->gradient(x_, t, regime, grad_);
    family_->hessian(x_, t, regime, hess_);

    LVBreakdown out;
    out.time_term = family_->time_derivative(x_, t, regime);
    for (std::size_t a = 0; a < n; ++a) out.drift_term += grad_[a] * f_[a];
    double trace = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t a = 0; a < n; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < n; ++b) row += hess_[a * n + b] * g_[b * m + j];
            trace += g_[a * m + j] * row;
        }
    }
    out.diffusion_term = 0.5 * trace;
    for (int l = 1; l <= model_->regimes(); ++l) {
        const double rate = model_->generator.rate(regime, l);
        if (rate != 0.0) out.switching_term += rate * family_->value(x_, t, l);
    }
    out.value = out.time_term + out.drift_term + out.diffusion_term + out.switching_term;
    return out;
}

LVBreakdown eval_LV(const LyapunovFamily& family, const ModelSpec& model, const SegmentView& view, double t,
                    int regime) {
    LVEvaluator evaluator(family, model);
    return evaluator(view, t, regime);
}

double MartingaleResidual::bias_allowance(double factor) const noexcept {
    return factor * dt * std::abs(mean_integral_lv);
}

bool MartingaleResidual::passes(double k_sigma, double bias_factor) const noexcept {
    return std::abs(residual) <= k_sigma * standard_error + bias_allowance(bias_factor);
}

MartingaleResidual martingale_residual(const LyapunovFamily& family, const SimulationBatch& batch, double t_end,
                                       int workers) {
    const ModelSpec& model = batch.model;
    if (!(t_end > model.t0) || t_end > batch.config.T * (1.0 + 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "t_end must lie in (t0, T]");
    }
    family.validate();
    if (family.regimes() != model.regimes()) {
        throw Error(ErrorCode::DimensionMismatch, "Lyapunov family and model have different regime counts");
    }

    constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
    const std::size_t n_paths = batch.size();
    std::vector<double> residuals(n_paths, kNaN), integrals(n_paths, kNaN), v_start(n_paths, kNaN),
        v_end(n_paths, kNaN);
    const double tol = 1e-9 * batch.config.dt;

    parallel_for(n_paths, workers, [&](std::size_t p) {
        const DensePath& path = batch.results[p].path;
        if (path.end_time() < t_end - tol) return;
        const std::size_t k_end = path.locate(t_end + tol);
        if (std::abs(path.time_at(k_end) - t_end) > tol) {
            throw Error(ErrorCode::InvalidArgument, "t_end is not a grid point");
        }
        LVEvaluator lv(family, model);
        const std::size_t k0 = path.t0_index();
        stats::CompensatedSum integral;
        double left = lv(SegmentView(path, path.time_at(k0)), path.time_at(k0), path.regime_at(k0)).value;
        for (std::size_t k = k0; k < k_end; ++k) {
            const int regime = path.regime_at(k);
            const double t_next = path.time_at(k + 1);
            const SegmentView next_view(path, t_next);
            const double right = lv(next_view, t_next, regime).value;
            integral.add(0.5 * (t_next - path.time_at(k)) * (left + right));
            const int next_regime = path.regime_at(k + 1);
            left = next_regime == regime ? right : lv(next_view, t_next, next_regime).value;
        }
        v_start[p] = family.value(path.value_at(k0), path.time_at(k0), path.regime_at(k0));
        v_end[p] = family.value(path.value_at(k_end), path.time_at(k_end), path.regime_at(k_end));
        integrals[p] = integral.value();
        residuals[p] = v_end[p] - v_start[p] - integrals[p];
    });

    std::vector<double> r, in, vs, ve;
    for (std::size_t p = 0; p < n_paths; ++p) {
        if (std::isnan(residuals[p])) continue;
        r.push_back(residuals[p]);
        in.push_back(integrals[p]);
        vs.push_back(v_start[p]);
        ve.push_back(v_end[p]);
    }
    MartingaleResidual out;
    out.dt = batch.config.dt;
    out.n_used = r.size();
    out.n_excluded = n_paths - r.size();
    if (out.n_used < 100) throw Error(ErrorCode::InsufficientPaths, "fewer than 100 usable paths");
    const auto mv = stats::mean_var(r);
    out.residual = mv.mean;
    out.standard_error = mv.stderr_of_mean();
    out.z = out.standard_error > 0.0 ? out.residual / out.standard_error
                             : (out.residual == 0.0 ? 0.0 : std::copysign(INFINITY, out.residual));
    out.mean_integral_lv = stats::mean_var(in).mean;
    out.mean_v_start = stats::mean_var(vs).mean;
    out.mean_v_end = stats::mean_var(ve).mean;
    return out;
}

SandwichReport check_sandwich(const LyapunovFamily& family, std::span<const double> radii,
                              std::span<const double> times) {
    family.validate();
    SandwichReport report;
    report.min_lower_ratio = INFINITY;
    for (int i = 1; i <= family.regimes(); ++i) {
        for (double t : times) {
            for (double r : radii) {
                if (!(r > 0.0)) continue;
                const double x[1] = {r};
                const double v = family.value(x, t, i);
                const double lower = std::pow(r, family.u0_power);
                double upper = 0.0;
                for (int p : family.u_powers) upper += std::pow(r, p);
                report.min_lower_ratio = std::min(report.min_lower_ratio, v / lower);
                if (upper > 0.0) report.max_upper_ratio = std::max(report.max_upper_ratio, v / upper);
                if (v < lower * (1.0 - 1e-12)) report.lower_holds = false;
                if (v > upper * (1.0 + 1e-12)) report.upper_holds = false;
            }
        }
    }
    return report;
}

LyapunovFamily preset_lyapunov(Preset p) {
    LyapunovFamily family;
    switch (p) {
        case Preset::Example34:
            family.per_regime = {{{1.0, 2}}, {{2.0, 2}, {2.0, 6}}};
            family.u0_power = 2;
            family.u_powers = {2, 6};
            break;
        case Preset::Example35:
            family.per_regime = {{{1.0, 2}}, {{2.0, 2}, {3.0, 8}}};
            family.u0_power = 2;
            family.u_powers = {2, 8};
            break;
        case Preset::Example37:
            family.per_regime = {{{1.0, 4}}, {{2.0, 4}, {3.0, 10}}};
            family.u0_power = 4;
            family.u_powers = {4, 10};
            break;
    }
    return family;
}

}  // namespace hpsfde
