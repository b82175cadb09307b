#include "hpsfde/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hpsfde/error.hpp"

namespace hpsfde {

namespace {

struct TermSums {
    double point = 0.0;    // sum b alpha
    double delayed = 0.0;  // sum b (1 - alpha)
};

TermSums sums(const CertificateFamily& family) {
    TermSums s;
    for (const auto& term : family.terms) {
        s.point += term.b * term.alpha;
        s.delayed += term.b * (1.0 - term.alpha);
    }
    return s;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string render_terms(const CertificateFamily& family, bool point) {
    std::string out;
    for (const auto& term : family.terms) {
        if (!out.empty()) out += " + ";
        out += fmt(term.b) + "*" + fmt(point ? term.alpha : 1.0 - term.alpha);
    }
    return out.empty() ? "0" : out;
}

double family_margin(const CertificateData& c, const CertificateFamily& family) {
    const TermSums s = sums(family);
    return -family.a + s.point + s.delayed / c.theta_lower;
}

std::string render_margin(const CertificateData& c, std::size_t k, double margin, const char* relation) {
    const auto& family = c.families[k];
    return "k=" + std::to_string(k + 1) + ": -" + fmt(family.a) + " + (" + render_terms(family, true) + ") + (1/" +
           fmt(c.theta_lower) + ")*(" + render_terms(family, false) + ") = " + fmt(margin) + " " + relation + " 0";
}

const CertificateFamily& family_at(const CertificateData& c, int k) {
    if (k < 1 || k > static_cast<int>(c.families.size())) {
        throw Error(ErrorCode::InvalidArgument, "family index out of range");
    }
    return c.families[static_cast<std::size_t>(k - 1)];
}

}  // namespace

void CertificateData::validate() const {
    if (families.empty()) throw Error(ErrorCode::InvalidArgument, "certificate needs at least one family");
    if (!(theta_lower > 0.0 && theta_lower < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "theta_lower must lie in (0, 1)");
    }
    if (!(a0 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "a0 must be >= 0");
    if (!(t0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "t0 must be positive");
    for (const auto& family : families) {
        if (!(family.a >= 0.0)) throw Error(ErrorCode::InvalidArgument, "a_k must be >= 0");
        for (const auto& term : family.terms) {
            if (!(term.b >= 0.0)) throw Error(ErrorCode::InvalidArgument, "b_kl must be >= 0");
            if (!(term.alpha >= 0.0 && term.alpha <= 1.0)) {
                throw Error(ErrorCode::InvalidArgument, "alpha_kl must lie in [0, 1]");
            }
        }
    }
    if (beta && !(*beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be >= 0");
    if (form == HypothesisForm::Kernel) {
        if (!beta) throw Error(ErrorCode::InvalidArgument, "kernel form requires beta");
        if (!(*beta > 0.0 && *beta < families.front().a)) {
            throw Error(ErrorCode::InvalidArgument, "kernel form requires 0 < beta < a_1");
        }
    }
}

CertificateVerdict check_existence(const CertificateData& c) {
    c.validate();
    CertificateVerdict v;
    v.holds = true;
    for (std::size_t k = 0; k < c.families.size(); ++k) {
        const double margin = family_margin(c, c.families[k]);
        v.margins.push_back(margin);
        v.holds = v.holds && margin <= 0.0;
        v.detail.push_back(render_margin(c, k, margin, "<="));
    }
    return v;
}

CertificateVerdict solve_epsilon_exponential(const CertificateData& c, double delta) {
    c.validate();
    if (!c.beta || c.form != HypothesisForm::Kernel) {
        throw Error(ErrorCode::NotApplicable, "exponential rate needs the kernel form with beta");
    }
    CertificateVerdict v;
    for (std::size_t k = 0; k < c.families.size(); ++k) {
        const double margin = family_margin(c, c.families[k]);
        v.margins.push_back(margin);
        v.detail.push_back(render_margin(c, k, margin, "<"));
        if (!(margin < 0.0)) {
            throw Error(ErrorCode::NotApplicable, "stability condition fails for k=" + std::to_string(k + 1));
        }
    }
    const double sup = -v.margins.front();
    v.epsilon_sup = sup;
    const double eps = std::min(*c.beta, sup - delta);
    if (eps > 0.0) {
        v.holds = true;
        v.epsilon = eps;
    }
    v.notes.push_back("epsilon = min(beta = " + fmt(*c.beta) + ", sup - " + fmt(delta) + ")");
    return v;
}

CertificateVerdict certify_exponential(const CertificateData& c, double epsilon) {
    c.validate();
    if (!c.beta || c.form != HypothesisForm::Kernel) {
        throw Error(ErrorCode::NotApplicable, "exponential rate needs the kernel form with beta");
    }
    CertificateVerdict v;
    const double rate_margin = epsilon + family_margin(c, c.families.front());
    v.margins.push_back(rate_margin);
    v.detail.push_back("rate: " + fmt(epsilon) + " - " + fmt(c.families.front().a) + " + (" +
                       render_terms(c.families.front(), true) + ") + (1/" + fmt(c.theta_lower) + ")*(" +
                       render_terms(c.families.front(), false) + ") = " + fmt(rate_margin) + " < 0");
    v.holds = epsilon > 0.0 && epsilon <= *c.beta && rate_margin < 0.0;
    for (std::size_t k = 0; k < c.families.size(); ++k) {
        const double margin = family_margin(c, c.families[k]);
        v.margins.push_back(margin);
        v.detail.push_back(render_margin(c, k, margin, "<"));
        v.holds = v.holds && margin < 0.0;
    }
    if (epsilon > *c.beta) v.notes.push_back("epsilon exceeds beta = " + fmt(*c.beta));
    v.epsilon = epsilon;
    v.epsilon_sup = -family_margin(c, c.families.front());
    return v;
}

double moment_bound(const CertificateData& c, double epsilon) {
    if (epsilon == 0.0) throw Error(ErrorCode::ZeroEpsilon, "moment bound needs epsilon > 0");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    return c.a0 / epsilon;
}

double time_average_denominator(const CertificateData& c, int k) {
    c.validate();
    const auto& family = family_at(c, k);
    const TermSums s = sums(family);
    const double decay = std::exp(-c.beta.value_or(0.0) * (1.0 - c.theta_lower) * c.t0);
    return family.a - decay * s.point - decay * s.delayed / c.theta_lower;
}

double time_average_bound(const CertificateData& c, int k) {
    const double denom = time_average_denominator(c, k);
    if (!(denom > 0.0)) {
        throw Error(ErrorCode::NonPositiveDenominator, "time-average denominator is " + fmt(denom));
    }
    return c.a0 / denom;
}

double polynomial_constraint(const CertificateData& c, int k, double epsilon) {
    const auto& family = family_at(c, k);
    const TermSums s = sums(family);
    const double lead = k == 1 ? epsilon : 0.0;
    return lead - family.a + s.point + std::pow(c.theta_lower, -(1.0 + epsilon)) * s.delayed;
}

CertificateVerdict solve_epsilon_polynomial(const CertificateData& c, double delta, double tolerance) {
    c.validate();
    if (c.a0 != 0.0) throw Error(ErrorCode::NotApplicable, "polynomial rate needs a0 = 0");
    const int m = static_cast<int>(c.families.size());
    const auto feasible = [&](double eps) {
        for (int k = 1; k <= m; ++k) {
            if (!(polynomial_constraint(c, k, eps) < 0.0)) return false;
        }
        return true;
    };

    CertificateVerdict v;
    if (c.beta) v.notes.push_back("beta is ignored by the polynomial rate condition");
    if (feasible(0.0)) {
        double lo = 0.0;
        double hi = c.families.front().a;
        while (hi - lo > tolerance) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        v.epsilon_sup = lo;
        const double eps = lo - delta;
        if (eps > 0.0) {
            v.holds = true;
            v.epsilon = eps;
        }
    }
    const double at = v.epsilon.value_or(0.0);
    for (int k = 1; k <= m; ++k) {
        const double g = polynomial_constraint(c, k, at);
        v.margins.push_back(g);
        v.detail.push_back("k=" + std::to_string(k) + " at epsilon=" + fmt(at) + ": " + fmt(g) + " < 0");
    }
    return v;
}

double dissipation_bound(const CertificateData& c, const std::vector<Measure>& nu, const SegmentView& view,
                         double t) {
    if (nu.size() != c.families.size()) {
        throw Error(ErrorCode::DimensionMismatch, "need one measure per certificate family");
    }
    const auto norm = [&](double theta) {
        std::vector<double> x(static_cast<std::size_t>(view.dim()));
        view.at(theta, x);
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return std::sqrt(r2);
    };
    const double beta = c.form == HypothesisForm::Kernel ? c.beta.value_or(0.0) : 0.0;
    const double x1 = norm(1.0);
    double bound = c.a0;
    for (std::size_t k = 0; k < c.families.size(); ++k) {
        const auto& family = c.families[k];
        const double u1 = std::pow(x1, family.power);
        bound -= family.a * u1;
        for (const auto& term : family.terms) {
            bound += term.b * nu[k].integrate([&](double theta) {
                const double weight = std::exp(-beta * (1.0 - theta) * t);
                const double u_theta = std::pow(norm(theta), family.power);
                return weight * std::pow(u1, term.alpha) * std::pow(u_theta, 1.0 - term.alpha);
            });
        }
    }
    return bound;
}

CertificateData preset_certificate(Preset p) {
    CertificateData c;
    c.a0 = 0.0;
    c.t0 = 1.0;
    c.theta_lower = preset_theta_lower(p);
    switch (p) {
        case Preset::Example34:
            c.form = HypothesisForm::Kernel;
            c.beta = 0.5;
            c.families = {{1.8, 2, {{1.0, 0.5}, {0.08, 0.0}}}, {3.4, 6, {{0.6, 5.0 / 6.0}, {1.2, 4.0 / 6.0}}}};
            break;
        case Preset::Example35:
            c.form = HypothesisForm::Kernel;
            c.beta = 0.6;
            c.families = {{2.64, 2, {{2.0, 0.5}}}, {6.24, 8, {{0.25, 0.5}}}};
            break;
        case Preset::Example37:
            c.form = HypothesisForm::Plain;
            c.families = {{3.32, 4, {{2.0, 0.75}}}, {8.55, 10, {{0.24, 0.5}}}};
            break;
    }
    return c;
}

std::vector<Measure> preset_certificate_measures(Preset p, const Measure& nu) {
    return std::vector<Measure>(preset_certificate(p).families.size(), nu);
}

}  // namespace hpsfde
