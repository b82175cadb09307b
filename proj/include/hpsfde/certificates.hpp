#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hpsfde/models.hpp"
#include "hpsfde/paths.hpp"

namespace hpsfde {

/// Kernel form (H2, decaying weight with rate beta) or plain form (H2').
enum class HypothesisForm { Kernel, Plain };

struct CertificateTerm {
    double b = 0.0;
    double alpha = 0.0;
};

/// One U_k = |x|^power with its dissipation coefficient a_k and terms (b_kl, alpha_kl).
struct CertificateFamily {
    double a = 0.0;
    int power = 2;
    std::vector<CertificateTerm> terms;
};

/// Coefficients of the dissipation inequality
///   LV <= a0 + sum_k [ -a_k U_k(phi(1)) + sum_l b_kl int K U_k(phi(1))^alpha U_k(phi(theta))^(1-alpha) dnu_k ]
/// with K = exp(-beta (1 - theta) t) in the kernel form and K = 1 otherwise.
struct CertificateData {
    HypothesisForm form = HypothesisForm::Plain;
    double a0 = 0.0;
    std::vector<CertificateFamily> families;
    double theta_lower = 0.5;
    /// Required for the kernel form; informational otherwise.
    std::optional<double> beta;
    double t0 = 1.0;

    /// Throws InvalidArgument on out-of-range coefficients.
    void validate() const;
};

struct CertificateVerdict {
    bool holds = false;
    /// Per-family value of the checked expression.
    std::vector<double> margins;
    std::optional<double> epsilon;
    /// Supremum of admissible epsilon before caps and strictness margin.
    std::optional<double> epsilon_sup;
    /// Rendered inequality instantiations, one per family.
    std::vector<std::string> detail;
    std::vector<std::string> notes;
};

constexpr double kStrictnessMargin = 1e-9;

/// margin_k = -a_k + sum b alpha + (1/theta_lower) sum b (1 - alpha); holds iff every margin <= 0.
CertificateVerdict check_existence(const CertificateData& c);

/// Largest exponential rate: min(beta, sup - delta) with
/// sup = a_1 - sum b_1l alpha_1l - (1/theta_lower) sum b_1l (1 - alpha_1l).
/// Throws NotApplicable without beta or when some family margin is not strictly negative.
CertificateVerdict solve_epsilon_exponential(const CertificateData& c, double delta = kStrictnessMargin);

/// Checks a given epsilon: 0 < epsilon <= beta, the k = 1 rate condition, and
/// strict stability for every family. Margins hold the k = 1 rate expression
/// first, then the family margins.
CertificateVerdict certify_exponential(const CertificateData& c, double epsilon);

/// a0 / epsilon. Throws ZeroEpsilon for epsilon == 0 and InvalidArgument for epsilon < 0.
double moment_bound(const CertificateData& c, double epsilon);

/// a_k - exp(-beta (1 - theta_lower) t0) [sum b alpha + (1/theta_lower) sum b (1 - alpha)],
/// beta taken as 0 when absent. k is 1-based.
double time_average_denominator(const CertificateData& c, int k);
/// a0 / time_average_denominator. Throws NonPositiveDenominator when it is <= 0.
double time_average_bound(const CertificateData& c, int k);

/// Value of the k-th polynomial-rate constraint at epsilon (feasible iff < 0).
double polynomial_constraint(const CertificateData& c, int k, double epsilon);

/// Largest epsilon with every polynomial constraint strictly negative, by
/// bisection on [0, a_1] to absolute tolerance `tolerance`, minus delta.
/// holds = false (no epsilon) when epsilon -> 0+ is already infeasible.
/// Throws NotApplicable when a0 != 0. Beta is ignored and noted if present.
CertificateVerdict solve_epsilon_polynomial(const CertificateData& c, double delta = kStrictnessMargin,
                                            double tolerance = 1e-10);

/// Right-hand side of the dissipation inequality on a segment, with one
/// measure per family (nu_k). Kernel form uses K = exp(-beta (1 - theta) t).
double dissipation_bound(const CertificateData& c, const std::vector<Measure>& nu, const SegmentView& view,
                         double t);

CertificateData preset_certificate(Preset p);
/// nu_k for each family of the preset certificate, given the generic measure nu.
std::vector<Measure> preset_certificate_measures(Preset p, const Measure& nu);

}  // namespace hpsfde
