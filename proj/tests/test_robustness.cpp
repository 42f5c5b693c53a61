#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "dru/error.hpp"
#include "dru/robustness.hpp"

using namespace dru;

namespace {

void check_valid(const WorstCase& wc, const DiscreteDistribution& d, double gamma) {
    REQUIRE(wc.ratios.size() == d.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(wc.ratios[i] >= 1.0 / gamma - 1e-12);
        CHECK(wc.ratios[i] <= gamma + 1e-12);
        mass += wc.ratios[i] * d.points()[i].prob;
    }
    CHECK(std::abs(mass - 1.0) <= 1e-9);
}

DiscreteDistribution random_distribution(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.05, 1.0), l(0.0, 10.0);
    std::vector<double> v(n), p(n);
    for (auto& x : v) x = l(rng);
    for (auto& x : p) x = u(rng);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= s;
    // absorb rounding so the sum is exactly representable as one
    p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
    return DiscreteDistribution::from(v, p);
}

}  // namespace

TEST_CASE("eta") {
    CHECK(eta(1.0) == 0.5);
    CHECK(eta(3.0) == 0.75);
    CHECK(eta(9.0) == doctest::Approx(0.9).epsilon(1e-15));
    double prev = 0.0;
    for (int k = 0; k <= 900; ++k) {
        const double g = 1.0 + k * 0.01;
        const double e = eta(g);
        CHECK(std::abs(g * (1 - e) + e / g - 1.0) <= 1e-12);
        CHECK(e > prev);
        CHECK(e < 1.0);
        prev = e;
    }
    CHECK_THROWS_AS(eta(0.99), Error);
}

TEST_CASE("distribution validation") {
    const std::vector<double> v{1, 2}, bad{0.5, 0.6}, zero{1.0, 0.0};
    CHECK_THROWS_AS(DiscreteDistribution::from(v, bad), Error);
    CHECK_THROWS_AS(DiscreteDistribution::from(v, zero), Error);
    CHECK(DiscreteDistribution::uniform(v).mean() == 1.5);
}

TEST_CASE("quantile and cvar") {
    const std::vector<double> four{1, 2, 3, 4}, two{0, 10}, one{2.5};
    const auto u4 = DiscreteDistribution::uniform(four);
    CHECK(quantile(u4, 0.5) == 2.0);
    CHECK(quantile(u4, 0.51) == 3.0);
    CHECK(cvar(u4, 0.5) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(cvar(DiscreteDistribution::uniform(one), 0.3) == 2.5);
    const std::vector<double> odd{7.25};
    for (double lv : {0.1, 0.3, 0.77}) CHECK(cvar(DiscreteDistribution::uniform(odd), lv) == 7.25);
    CHECK(cvar(DiscreteDistribution::uniform(two), 0.75) == 10.0);
    // straddling atom: top 0.6 of {1,2,3,4} is 4,3 and 0.1 of 2
    CHECK(cvar(u4, 0.4) == doctest::Approx((0.25 * 4 + 0.25 * 3 + 0.1 * 2) / 0.6));
    CHECK_THROWS_AS(cvar(u4, 0.0), Error);
    CHECK_THROWS_AS(cvar(u4, 1.0), Error);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto d = random_distribution(rng, 1 + i % 12);
        double prev = d.mean() - 1e-12;
        for (int k = 1; k < 20; ++k) {
            const double c = cvar(d, k / 20.0);
            CHECK(c >= prev - 1e-12);
            prev = c;
        }
    }
}

TEST_CASE("worst_case_ru examples") {
    const std::vector<double> l{0, 1, 4}, same{3, 3, 3};
    const auto d = DiscreteDistribution::uniform(l);
    auto wc = worst_case_ru(d, 2.0);
    CHECK(wc.sup_value == doctest::Approx(17.0 / 6.0).epsilon(1e-14));
    CHECK(wc.ratios[2] == doctest::Approx(2.0));
    CHECK(wc.ratios[1] == doctest::Approx(0.5));
    CHECK(wc.ratios[0] == doctest::Approx(0.5));
    check_valid(wc, d, 2.0);

    wc = worst_case_ru(d, 1.0);
    for (double r : wc.ratios) CHECK(r == 1.0);
    CHECK(wc.sup_value == doctest::Approx(5.0 / 3.0));

    CHECK(worst_case_ru(DiscreteDistribution::uniform(same), 7.0).sup_value == doctest::Approx(3.0));
    CHECK_FALSE(wc.direction_consistent.has_value());
}

TEST_CASE("LP oracle examples") {
    const std::vector<double> v{0, 1}, l{0, 1, 4};
    CHECK(sup_oracle_lp(DiscreteDistribution::uniform(v), 3.0) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
    CHECK(sup_oracle_lp(DiscreteDistribution::uniform(l), 1.0) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(sup_oracle_lp(DiscreteDistribution::uniform(l), 2.0) == doctest::Approx(17.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("worst_case_dru examples") {
    const std::vector<double> l{4, 3, 2, 1};
    const auto d = DiscreteDistribution::uniform(l);

    SUBCASE("gamma one") {
        const std::vector<int> s{1, -1, 1, -1};
        const auto wc = worst_case_dru(d, s, {1.0, Direction::up});
        for (double r : wc.ratios) CHECK(r == 1.0);
        CHECK(wc.sup_value == doctest::Approx(2.5));
    }
    SUBCASE("too little directional mass is infeasible") {
        // one quarter of the mass carries sign +, gamma = 2 needs a third
        const std::vector<int> s{1, -1, -1, -1};
        try {
            worst_case_dru(d, s, {2.0, Direction::up});
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::infeasible);
        }
        CHECK_THROWS_AS(sup_oracle_lp(d, 2.0, DirectionalMask{s, Direction::up}), Error);
    }
    SUBCASE("fractional fill on the directional side") {
        const std::vector<int> s{1, 1, 1, -1};
        const auto wc = worst_case_dru(d, s, {1.5, Direction::up});
        check_valid(wc, d, 1.5);
        // hand construction: the top point at 1.5, the next absorbs the
        // remaining budget 1/8 above its floor 1/6, the rest at 2/3
        CHECK(wc.ratios[0] == doctest::Approx(1.5));
        CHECK(wc.ratios[1] == doctest::Approx(7.0 / 6.0));
        CHECK(wc.ratios[2] == doctest::Approx(2.0 / 3.0));
        CHECK(wc.ratios[3] == doctest::Approx(2.0 / 3.0));
        CHECK(wc.sup_value == doctest::Approx(2.875).epsilon(1e-14));
        CHECK(sup_oracle_lp(d, 1.5, DirectionalMask{s, Direction::up}) == doctest::Approx(2.875).epsilon(1e-14));
        REQUIRE(wc.direction_consistent.has_value());
        CHECK(*wc.direction_consistent);
    }
    SUBCASE("direction none is rejected") {
        const std::vector<int> s{1, 1, 1, -1};
        CHECK_THROWS_AS(worst_case_dru(d, s, {2.0, Direction::none}), Error);
        const std::vector<int> short_signs{1, 1};
        CHECK_THROWS_AS(worst_case_dru(d, short_signs, {2.0, Direction::up}), Error);
    }
}

TEST_CASE("greedy constructions agree with the LP oracle on random instances") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ug(1.0, 5.0);
    int dru_checked = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 1 + rng() % 20;
        const auto d = random_distribution(rng, n);
        const double g = ug(rng);
        const auto wc = worst_case_ru(d, g);
        check_valid(wc, d, g);
        const double lp = sup_oracle_lp(d, g);
        CHECK(std::abs(wc.sup_value - lp) <= 1e-9);
        CHECK(wc.sup_value >= d.mean() - 1e-12);

        std::vector<int> signs(n);
        for (auto& s : signs) s = (rng() & 1) ? 1 : -1;
        const Direction dir = (rng() & 1) ? Direction::up : Direction::down;
        double dmass = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (signs[i] == sign_of(dir)) dmass += d.points()[i].prob;
        if (dmass < 1.0 / (g + 1.0)) {
            CHECK_THROWS_AS(worst_case_dru(d, signs, {g, dir}), Error);
            continue;
        }
        const auto wd = worst_case_dru(d, signs, {g, dir});
        check_valid(wd, d, g);
        CHECK(std::abs(wd.sup_value - sup_oracle_lp(d, g, DirectionalMask{signs, dir})) <= 1e-9);
        CHECK(wd.sup_value <= wc.sup_value + 1e-9);
        for (std::size_t i = 0; i < n; ++i)
            if (signs[i] != sign_of(dir)) CHECK(wd.ratios[i] == doctest::Approx(1.0 / g));
        ++dru_checked;
    }
    CHECK(dru_checked >= 30);
}

TEST_CASE("dominance is strict away from the degenerate cases") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 50; ++i) {
        const auto d = random_distribution(rng, 2 + i % 10);
        CHECK(worst_case_ru(d, 1.0).sup_value == doctest::Approx(d.mean()).epsilon(1e-12));
        CHECK(worst_case_ru(d, 1.5).sup_value > d.mean());
    }
}
