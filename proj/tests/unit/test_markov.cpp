#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hpsfde/error.hpp"
#include "hpsfde/markov.hpp"
#include "test_util.hpp"

using namespace hpsfde;
using Catch::Matchers::WithinAbs;

TEST_CASE("make_generator accepts valid generators", "[markov]") {
    const auto g = make_generator({{-1, 1}, {2, -2}});
    CHECK(g.size() == 2);
    CHECK(g.rate(1, 2) == 1.0);
    CHECK(g.exit_rate(2) == 2.0);
    CHECK(make_generator({{0}}).size() == 1);
}

TEST_CASE("make_generator rejects invalid generators", "[markov]") {
    CHECK(code_of([] { make_generator({{-1, 0.5}, {2, -2}}); }) == ErrorCode::RowSumNonZero);
    CHECK(code_of([] { make_generator({{1, -1}, {2, -2}}); }) == ErrorCode::NegativeOffDiagonal);
    CHECK(code_of([] { make_generator({{-1, 1}}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { make_generator({}); }) == ErrorCode::InvalidArgument);
    // within the 1e-12 row-sum tolerance
    CHECK_NOTHROW(make_generator({{-1, 1 + 5e-13}, {2, -2}}));
}

TEST_CASE("single-state chain never jumps", "[markov]") {
    const auto g = make_generator({{0}});
    const auto path = sample_regime_path(g, 1, 1.0, 1e4, 42ULL);
    CHECK(path.jump_count() == 0);
    CHECK(path.states == std::vector<int>{1});
    CHECK(path.state_at(5000.0) == 1);
}

TEST_CASE("regime paths satisfy their structural invariants", "[markov]") {
    const auto g = make_generator({{-1, 1}, {2, -2}});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = sample_regime_path(g, 2, 1.0, 50.0, seed);
        REQUIRE(p.states.size() == p.jump_times.size() + 1);
        CHECK(p.initial_state() == 2);
        for (std::size_t k = 0; k < p.jump_times.size(); ++k) {
            CHECK(p.jump_times[k] > (k ? p.jump_times[k - 1] : 1.0));
            CHECK(p.jump_times[k] <= 50.0);
            CHECK(p.states[k] != p.states[k + 1]);
        }
    }
}

TEST_CASE("sample_regime_path is reproducible", "[markov]") {
    const auto g = make_generator({{-1, 1}, {2, -2}});
    const auto a = sample_regime_path(g, 1, 1.0, 100.0, 123ULL);
    const auto b = sample_regime_path(g, 1, 1.0, 100.0, 123ULL);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.states == b.states);
    const auto c = sample_regime_path(g, 1, 1.0, 100.0, 124ULL);
    CHECK(a.jump_times != c.jump_times);
}

TEST_CASE("holding times in state 2 have mean 1/2", "[markov][statistical]") {
    const auto g = make_generator({{-1, 1}, {2, -2}});
    const auto p = sample_regime_path(g, 1, 0.0, 3e4, 7ULL);
    std::vector<double> sojourns;
    for (std::size_t k = 1; k + 1 < p.states.size(); ++k) {
        if (p.states[k] == 2) sojourns.push_back(p.jump_times[k] - p.jump_times[k - 1]);
    }
    REQUIRE(sojourns.size() >= 10000);
    double mean = 0.0;
    for (double s : sojourns) mean += s;
    mean /= static_cast<double>(sojourns.size());
    double var = 0.0;
    for (double s : sojourns) var += (s - mean) * (s - mean);
    var /= static_cast<double>(sojourns.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(sojourns.size()));
    CHECK(std::abs(mean - 0.5) <= 3.0 * se);
}

TEST_CASE("jump destinations follow the embedded chain", "[markov][statistical]") {
    const auto g = make_generator({{-3, 1, 2}, {1, -2, 1}, {0.5, 0.5, -1}});
    const auto p = sample_regime_path(g, 1, 0.0, 2e4, 99ULL);
    std::size_t from1 = 0, to2 = 0;
    for (std::size_t k = 0; k + 1 < p.states.size(); ++k) {
        if (p.states[k] != 1) continue;
        ++from1;
        if (p.states[k + 1] == 2) ++to2;
    }
    REQUIRE(from1 >= 5000);
    const double prob = 1.0 / 3.0;
    const double freq = static_cast<double>(to2) / static_cast<double>(from1);
    const double se = std::sqrt(prob * (1.0 - prob) / static_cast<double>(from1));
    CHECK(std::abs(freq - prob) <= 3.0 * se);
}

TEST_CASE("occupation fractions approach the stationary law", "[markov][statistical]") {
    const auto g = make_generator({{-1, 1}, {2, -2}});
    const auto p = sample_regime_path(g, 1, 0.0, 1e4, 2024ULL);
    const auto occ = p.occupation_fractions(2);
    CHECK_THAT(occ[0], WithinAbs(2.0 / 3.0, 0.02));
    CHECK_THAT(occ[1], WithinAbs(1.0 / 3.0, 0.02));
    CHECK_THAT(occ[0] + occ[1], WithinAbs(1.0, 1e-12));
}

TEST_CASE("stationary_distribution solves pi Gamma = 0", "[markov]") {
    auto pi = stationary_distribution(make_generator({{-1, 1}, {2, -2}}));
    CHECK_THAT(pi[0], WithinAbs(2.0 / 3.0, 1e-12));
    CHECK_THAT(pi[1], WithinAbs(1.0 / 3.0, 1e-12));
    pi = stationary_distribution(make_generator({{-3, 3}, {3, -3}}));
    CHECK_THAT(pi[0], WithinAbs(0.5, 1e-12));
    pi = stationary_distribution(make_generator({{0}}));
    CHECK(pi.size() == 1);
    CHECK_THAT(pi[0], WithinAbs(1.0, 1e-12));

    const auto g3 = make_generator({{-3, 1, 2}, {1, -2, 1}, {0.5, 0.5, -1}});
    pi = stationary_distribution(g3);
    for (int j = 1; j <= 3; ++j) {
        double s = 0.0;
        for (int i = 1; i <= 3; ++i) s += pi[static_cast<std::size_t>(i - 1)] * g3.rate(i, j);
        CHECK_THAT(s, WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("reducible chains are rejected", "[markov]") {
    CHECK(code_of([] { stationary_distribution(make_generator({{0, 0}, {0, 0}})); }) == ErrorCode::ReducibleChain);
    CHECK(code_of([] {
              stationary_distribution(make_generator({{-1, 1, 0, 0}, {1, -1, 0, 0}, {0, 0, -2, 2}, {0, 0, 2, -2}}));
          }) == ErrorCode::ReducibleChain);
}
