#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <vector>

#include "hpsfde/certificates.hpp"
#include "hpsfde/integrator.hpp"
#include "hpsfde/paths.hpp"

namespace oracle {

/// Scalar path through the given (t, x) knots; regime 1 from t0 on.
inline hpsfde::DensePath scalar_path(double theta_lower, double t0, const std::vector<double>& times,
                                     const std::vector<double>& values, int regime = 1) {
    hpsfde::DensePath p(1, theta_lower, t0);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double x[1] = {values[k]};
        p.append(times[k], x, times[k] < t0 ? 0 : regime);
    }
    return p;
}

/// Constant scalar path x = c on [theta_lower t0, T].
inline hpsfde::DensePath constant_path(double theta_lower, double t0, double c, double T, int regime = 1) {
    if (T > t0) return scalar_path(theta_lower, t0, {theta_lower * t0, t0, T}, {c, c, c}, regime);
    return scalar_path(theta_lower, t0, {theta_lower * t0, t0}, {c, c}, regime);
}

/// Composite Simpson with n (even) panels, written independently of the library.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

/// int exp(-beta (1 - theta) t) dnu for nu uniform on [lo, 1], closed form.
inline double uniform_kernel_mass(double beta, double t, double lo) {
    if (beta * t == 0.0) return 1.0;
    return (1.0 - std::exp(-beta * (1.0 - lo) * t)) / (beta * t * (1.0 - lo));
}

/// Certificate margins written straight from the inequality, term by term.
inline double existence_margin(const hpsfde::CertificateData& c, std::size_t k) {
    const auto& f = c.families[k];
    double m = -f.a;
    for (const auto& t : f.terms) m = m + t.b * t.alpha + t.b * (1.0 - t.alpha) * (1.0 / c.theta_lower);
    return m;
}

inline double polynomial_lhs(const hpsfde::CertificateData& c, std::size_t k, double eps) {
    const auto& f = c.families[k];
    double m = (k == 0 ? eps : 0.0) - f.a;
    for (const auto& t : f.terms) {
        m = m + t.b * t.alpha + t.b * std::pow(1.0 / c.theta_lower, 1.0 + eps) * (1.0 - t.alpha);
    }
    return m;
}

/// Batch built from explicit scalar paths on the uniform grid of (t0, T, dt).
inline hpsfde::SimulationBatch synthetic_batch(double theta_lower, double t0, double T, double dt,
                                               const std::vector<std::function<double(double)>>& paths) {
    hpsfde::SimulationBatch b;
    b.model.theta_lower = theta_lower;
    b.model.t0 = t0;
    b.model.drift = {{}};
    b.model.diffusion = {{}};
    b.config.dt = dt;
    b.config.T = T;
    const auto grid = hpsfde::uniform_grid(t0, T, dt);
    for (const auto& fn : paths) {
        hpsfde::PathResult r;
        r.path = hpsfde::DensePath(1, theta_lower, t0, dt);
        const double x0[1] = {fn(t0)};
        r.path.append(theta_lower * t0, x0, 0);
        for (double t : grid) {
            const double x[1] = {fn(t)};
            r.path.append(t, x, 1);
        }
        b.results.push_back(std::move(r));
    }
    return b;
}

}  // namespace oracle
