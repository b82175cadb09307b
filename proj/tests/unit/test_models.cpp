#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hpsfde/models.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hpsfde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Scalar path of fn sampled every h on [theta_lower t0, T].
DensePath sampled_path(double theta_lower, double t0, double T, double h, double (*fn)(double)) {
    DensePath p(1, theta_lower, t0, h);
    const auto n = static_cast<int>(std::ceil((T - theta_lower * t0) / h));
    for (int k = 0; k <= n; ++k) {
        const double t = k == n ? T : theta_lower * t0 + k * h;
        const double x[1] = {fn(t)};
        p.append(t, x, t < t0 ? 0 : 1);
    }
    return p;
}

double smooth(double s) { return 0.5 + 0.3 * std::sin(s); }

double drift1(const ModelSpec& m, const SegmentView& v, double t, int i) { return eval_drift(m, v, t, i)[0]; }
double diffusion1(const ModelSpec& m, const SegmentView& v, double t, int i) { return eval_diffusion(m, v, t, i)[0]; }

}  // namespace

TEST_CASE("Example 3.4 coefficients at phi = 1 with nu = delta_1", "[models]") {
    const ModelSpec m = preset(Preset::Example34, Measure::dirac(1.0));
    const auto p = oracle::constant_path(0.5, 1.0, 1.0, 1.0);
    const SegmentView v(p, 1.0);
    CHECK_THAT(drift1(m, v, 0.0, 2), WithinAbs(0.1, 1e-15));
    CHECK_THAT(diffusion1(m, v, 0.0, 2), WithinAbs(0.2, 1e-15));
    CHECK_THAT(drift1(m, v, 0.0, 1), WithinAbs(-15.0 + 0.5, 1e-14));
    CHECK_THAT(diffusion1(m, v, 0.0, 1), WithinAbs(0.5, 1e-15));
}

TEST_CASE("zero segment gives zero coefficients", "[models]") {
    for (Preset pr : {Preset::Example34, Preset::Example35, Preset::Example37}) {
        const ModelSpec m = preset(pr);
        const auto p = oracle::constant_path(m.theta_lower, 1.0, 0.0, 4.0);
        for (double t : {1.0, 2.5, 4.0}) {
            for (int i = 1; i <= 2; ++i) {
                CHECK(drift1(m, SegmentView(p, t), t, i) == 0.0);
                CHECK(diffusion1(m, SegmentView(p, t), t, i) == 0.0);
            }
        }
    }
}

TEST_CASE("Example 3.7 regime 1 diffusion at phi = 1 is 0.2", "[models]") {
    const ModelSpec m = preset(Preset::Example37);
    const auto p = oracle::constant_path(0.75, 1.0, 1.0, 10.0);
    for (double t : {1.0, 3.3, 10.0}) CHECK_THAT(diffusion1(m, SegmentView(p, t), t, 1), WithinAbs(0.2, 1e-14));
}

TEST_CASE("regime 2 subsystems reduce to linear SDEs", "[models]") {
    const ModelSpec m5 = preset(Preset::Example35);
    const ModelSpec m7 = preset(Preset::Example37);
    const auto p5 = sampled_path(0.7, 1.0, 3.0, 0.01, smooth);
    const auto p7 = sampled_path(0.75, 1.0, 3.0, 0.01, smooth);
    for (double t : {1.0, 2.0, 3.0}) {
        const double x5 = p5.eval_scalar(t);
        const double x7 = p7.eval_scalar(t);
        CHECK_THAT(drift1(m5, SegmentView(p5, t), t, 2), WithinRel(0.08 * x5, 1e-14));
        CHECK_THAT(diffusion1(m5, SegmentView(p5, t), t, 2), WithinRel(0.1 * x5, 1e-14));
        CHECK_THAT(drift1(m7, SegmentView(p7, t), t, 2), WithinRel(0.07 * x7, 1e-14));
        CHECK_THAT(diffusion1(m7, SegmentView(p7, t), t, 2), WithinRel(0.1 * x7, 1e-14));
    }
}

TEST_CASE("Example 3.5 regime 2 drift is positively homogeneous", "[models][property]") {
    const ModelSpec m = preset(Preset::Example35);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> times{0.7, 1.0, 1.4, 2.0}, a, b;
        const double c = 0.1 + 5.0 * (u(rng) + 1.0);
        for (std::size_t k = 0; k < times.size(); ++k) {
            a.push_back(u(rng));
            b.push_back(c * a.back());
        }
        const auto pa = oracle::scalar_path(0.7, 1.0, times, a);
        const auto pb = oracle::scalar_path(0.7, 1.0, times, b);
        const double t = 1.0 + (u(rng) + 1.0) / 2.0;
        CHECK_THAT(drift1(m, SegmentView(pb, t), t, 2), WithinRel(c * drift1(m, SegmentView(pa, t), t, 2), 1e-13));
    }
}

TEST_CASE("pantograph integrals match independent quadrature", "[models]") {
    // constant phi: closed-form kernel mass; 64-interval Simpson error is below 1e-9 for t <= 5
    const ModelSpec m = preset(Preset::Example34);
    const double c = 0.8;
    const auto p = oracle::constant_path(0.5, 1.0, c, 5.0);
    for (double t : {1.0, 2.0, 5.0}) {
        const double mass = oracle::uniform_kernel_mass(0.5, t, 0.5);
        const double expect = -5.0 * (c + c * c * c + std::pow(c, 5)) + 0.5 * c * mass;
        CHECK_THAT(drift1(m, SegmentView(p, t), t, 1), WithinAbs(expect, 1e-9));
        CHECK_THAT(diffusion1(m, SegmentView(p, t), t, 1), WithinAbs(0.5 * c * c * c * mass, 1e-9));
    }
    // smooth phi: fine Simpson over theta
    const auto q = sampled_path(0.5, 1.0, 4.0, 1e-4, smooth);
    const double t = 4.0;
    const double ref = oracle::simpson(
        [&](double th) { return std::exp(-0.5 * (1.0 - th) * t) * std::abs(q.eval_scalar(th * t)) / 0.5; }, 0.5, 1.0);
    const double x = q.eval_scalar(t);
    CHECK_THAT(drift1(m, SegmentView(q, t), t, 2), WithinAbs(0.05 * x + 0.05 * ref, 1e-8));
}

TEST_CASE("halving the quadrature spacing changes preset coefficients by < 1e-8", "[models][property]") {
    for (Preset pr : {Preset::Example34, Preset::Example35, Preset::Example37}) {
        const double tl = preset_theta_lower(pr);
        const ModelSpec coarse = preset(pr, Measure::uniform(tl, 1.0, 64));
        const ModelSpec fine = preset(pr, Measure::uniform(tl, 1.0, 128));
        const auto q = sampled_path(tl, 1.0, 6.0, 1e-4, smooth);
        for (double t : {1.0, 2.5, 6.0}) {
            const SegmentView v(q, t);
            for (int i = 1; i <= 2; ++i) {
                CHECK(std::abs(drift1(coarse, v, t, i) - drift1(fine, v, t, i)) < 1e-8);
                CHECK(std::abs(diffusion1(coarse, v, t, i) - diffusion1(fine, v, t, i)) < 1e-8);
            }
        }
    }
}

TEST_CASE("atom measures integrate exactly", "[models]") {
    const Measure nu = Measure::atoms({{0.6, 0.25}, {0.9, 0.75}});
    const auto& nodes = nu.nodes();
    REQUIRE(nodes.size() == 2);
    CHECK(nu.integrate([](double th) { return th * th; }) == 0.25 * 0.36 + 0.75 * 0.81);
    CHECK(nu.total_mass() == 1.0);
}

TEST_CASE("piecewise densities integrate polynomials up to cubic exactly", "[models]") {
    const Measure nu = Measure::piecewise_density({0.5, 0.8, 1.0}, {0.5 / 0.3, 0.5 / 0.2}, 8);
    CHECK_THAT(nu.total_mass(), WithinAbs(1.0, 1e-15));
    const double expect = (0.5 / 0.3) * (std::pow(0.8, 4) - std::pow(0.5, 4)) / 4.0 +
                          (0.5 / 0.2) * (1.0 - std::pow(0.8, 4)) / 4.0;
    CHECK_THAT(nu.integrate([](double th) { return th * th * th; }), WithinAbs(expect, 1e-14));
}

TEST_CASE("measure validation", "[models]") {
    CHECK(code_of([] { Measure::atoms({{0.6, 0.5}}).validate(0.5); }) == ErrorCode::UnsupportedMeasure);
    CHECK(code_of([] { Measure::uniform(0.3, 1.0).validate(0.5); }) == ErrorCode::UnsupportedMeasure);
    CHECK(code_of([] { Measure::atoms({{1.2, 1.0}}).validate(0.5); }) == ErrorCode::UnsupportedMeasure);
    CHECK(code_of([] { (void)preset(Preset::Example34, Measure::uniform(0.3, 1.0)); }) ==
          ErrorCode::UnsupportedMeasure);
    CHECK(code_of([] { (void)preset(Preset::Example35, Measure::dirac(0.6)); }) == ErrorCode::UnsupportedMeasure);
    CHECK_NOTHROW(preset(Preset::Example35, Measure::dirac(0.7)));
}

TEST_CASE("kernel validation enforces the beta bound", "[models]") {
    CHECK_NOTHROW(Kernel::linear(0.5).validate(0.5));
    CHECK_NOTHROW(Kernel({0.5, 0.9}).validate(0.5));
    CHECK(code_of([] { Kernel({0.5, 0.4}).validate(0.5); }) == ErrorCode::InvalidArgument);
    CHECK_THAT(Kernel::linear(0.5).factor(0.5, 2.0), WithinAbs(std::exp(-0.5), 1e-15));
}

TEST_CASE("preset tables match the example constants", "[models]") {
    const ModelSpec m4 = preset(Preset::Example34);
    CHECK(m4.theta_lower == 0.5);
    CHECK(m4.generator.rows() == std::vector<std::vector<double>>{{-1, 1}, {2, -2}});
    REQUIRE(m4.kernels.size() == 1);
    CHECK(m4.kernels[0].beta == 0.5);
    const auto& poly = std::get<PointPolynomialTerm>(m4.drift[0][0].body);
    REQUIRE(poly.monomials.size() == 3);
    CHECK(poly.monomials[2].coeff == -5.0);
    CHECK(poly.monomials[2].power == 5.0);
    const auto& g2 = std::get<PantographTerm>(m4.diffusion[1][0].body);
    CHECK(g2.coeff == 0.2);
    CHECK(g2.kernel == 0);

    const ModelSpec m5 = preset(Preset::Example35);
    CHECK(m5.theta_lower == 0.7);
    CHECK(m5.generator.rows() == std::vector<std::vector<double>>{{-1, 1}, {3, -3}});
    CHECK(m5.kernels.at(0).beta == 0.6);
    REQUIRE(m5.measures.size() == 2);
    CHECK(m5.measures[1].kind() == Measure::Kind::Atoms);
    CHECK(m5.measures[1].atom_list().at(0).theta == 1.0);

    const ModelSpec m7 = preset(Preset::Example37);
    CHECK(m7.theta_lower == 0.75);
    CHECK(m7.kernels.empty());
    CHECK(m7.generator.rows() == std::vector<std::vector<double>>{{-1, 1}, {4, -4}});
    const auto& g1 = std::get<PantographTerm>(m7.diffusion[0][0].body);
    CHECK(g1.point_exponent == 1.5);
    CHECK(g1.delay_exponent == 2.5);
    CHECK(parse_preset("example_3_5") == Preset::Example35);
    CHECK_FALSE(parse_preset("example_9").has_value());
}

TEST_CASE("model validation catches structural errors", "[models]") {
    ModelSpec m = preset(Preset::Example34);
    m.drift.pop_back();
    CHECK(code_of([&] { m.validate(); }) == ErrorCode::InvalidArgument);

    ModelSpec v = preset(Preset::Example34);
    v.dim = 2;
    v.initial_segment = InitialSegment::constant_value({0.0, 0.0});
    CHECK(code_of([&] { v.validate(); }) == ErrorCode::DimensionMismatch);

    ModelSpec q = preset(Preset::Example34);
    std::get<PantographTerm>(q.drift[0][1].body).measure = 3;
    CHECK(code_of([&] { q.validate(); }) == ErrorCode::QuadratureUnsupported);

    ModelSpec t = preset(Preset::Example34);
    t.t0 = 0.0;
    CHECK(code_of([&] { t.validate(); }) == ErrorCode::InvalidArgument);

    const ModelSpec s = preset(Preset::Example34);
    DensePath p2(2, 0.5, 1.0);
    const double x[2] = {0.0, 0.0};
    p2.append(0.5, x, 0);
    p2.append(1.0, x, 1);
    CHECK(code_of([&] { (void)eval_drift(s, SegmentView(p2, 1.0), 1.0, 1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("custom terms are evaluable but not certifiable", "[models]") {
    ModelSpec m = preset(Preset::Example34);
    CHECK(m.certifiable());
    m.drift[0].push_back({CustomTerm{[](const SegmentView&, double, std::span<double> out) { out[0] = 1.0; }, "one"}, 0});
    CHECK_FALSE(m.certifiable());
    const auto p = oracle::constant_path(0.5, 1.0, 0.0, 2.0);
    CHECK(drift1(m, SegmentView(p, 2.0), 2.0, 1) == 1.0);
}

TEST_CASE("multi-dimensional states with linear terms", "[models]") {
    ModelSpec m;
    m.dim = 2;
    m.brownian_dim = 2;
    m.theta_lower = 0.5;
    m.measures = {Measure::dirac(0.5)};
    m.drift = {{{PointPolynomialTerm{{{-1.0, 1.0, false}}}, 0}, {PantographTerm{0.5, 0, -1, 0.0, 1.0, true}, 0}}};
    m.diffusion = {{{PointPolynomialTerm{{{0.3, 1.0, false}}}, 1}}};
    m.initial_segment = InitialSegment::constant_value({1.0, -2.0});
    REQUIRE_NOTHROW(m.validate());
    DensePath p(2, 0.5, 1.0);
    const double a[2] = {1.0, -2.0}, b[2] = {3.0, 4.0};
    p.append(0.5, a, 0);
    p.append(1.0, a, 0);
    p.append(2.0, b, 1);
    const auto f = eval_drift(m, SegmentView(p, 2.0), 2.0, 1);
    CHECK(f == std::vector<double>{-3.0 + 0.5 * 1.0, -4.0 + 0.5 * -2.0});
    const auto g = eval_diffusion(m, SegmentView(p, 2.0), 2.0, 1);
    CHECK(g == std::vector<double>{0.0, 0.3 * 3.0, 0.0, 0.3 * 4.0});
}

TEST_CASE("local Lipschitz probe", "[models]") {
    ModelSpec lin;
    lin.theta_lower = 0.5;
    lin.drift = {{{PointPolynomialTerm{{{1.0, 1.0, false}}}, 0}}};
    lin.diffusion = {{}};
    const auto r = validate_local_lipschitz_probe(lin, 2.0, 500, 1);
    CHECK(r.max_ratio <= 1.0 + 1e-9);
    CHECK(r.max_ratio > 0.0);
    CHECK_FALSE(r.suspect_non_lipschitz);

    const auto r34 = validate_local_lipschitz_probe(preset(Preset::Example34), 1.0, 500, 2);
    CHECK(std::isfinite(r34.max_ratio));
    CHECK(r34.max_ratio > 1.0);
    CHECK(r34.max_ratio < 100.0);
    CHECK(r34.max_ratio_per_regime.size() == 2);
    CHECK_FALSE(r34.suspect_non_lipschitz);

    ModelSpec root = lin;
    root.drift = {{{PointPolynomialTerm{{{1.0, 0.5, true}}}, 0}}};
    const auto rr = validate_local_lipschitz_probe(root, 1.0, 2000, 3);
    CHECK(rr.suspect_non_lipschitz);
    CHECK(rr.max_ratio > 100.0);
}
