#include <cmath>
#include <random>

#include "doctest.h"
#include "dru/error.hpp"
#include "dru/losses.hpp"

using namespace dru;

namespace {
const MetaInfo up2{2.0, Direction::up};
}

TEST_CASE("squared loss") {
    CHECK(squared_loss(2, 1) == 1.0);
    CHECK(squared_loss(0.37, 0.37) == 0.0);
    CHECK(squared_loss(0.5, -1.5) == 4.0);
}

TEST_CASE("RU loss") {
    CHECK(ru_loss(2, 0.7, 1, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ru_loss(2, 0.5, 1, 2.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(ru_loss(2, 2.0, 1, 2.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK_THROWS_AS(ru_loss(2, 0.5, 1, 0.5), Error);
}

TEST_CASE("dRU loss") {
    for (auto d : {Direction::up, Direction::down}) CHECK(dru_loss(3.0, 0.4, 1.25, {1.0, d}) == squared_loss(3.0, 1.25));
    CHECK(dru_loss(2, 0.5, 1, up2) == doctest::Approx(1.75).epsilon(1e-15));
    // residual -1 does not match d = +1: hinge gated off
    CHECK(dru_loss(2, 0.5, 3, up2) == doctest::Approx(1.0).epsilon(1e-15));
    // z == y never opens the gate
    CHECK(dru_loss(1, 0.0, 1, up2) == 0.0);
    try {
        dru_loss(2, 0.5, 1, {2.0, Direction::none});
        FAIL("expected a parameter error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parameter);
    }
    CHECK(dru_loss(2, 0.5, 1, {1.0, Direction::none}) == 1.0);
}

TEST_CASE("squared pinball loss") {
    CHECK(pinball_loss(2, 1, 0.5) == 0.5);
    CHECK(pinball_loss(2, 1, 0.9) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(pinball_loss(1, 2, 0.9) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(pinball_loss(1, 1, 0.9) == 0.0);
    CHECK_THROWS_AS(pinball_loss(1, 2, 0.0), Error);
    CHECK_THROWS_AS(pinball_loss(1, 2, 1.0), Error);
}

TEST_CASE("loss gradients") {
    auto g = loss_gradients(LossSpec::squared(), 2, 0, 1);
    CHECK(g.dz == 2.0);
    CHECK(g.da == 0.0);

    g = loss_gradients(LossSpec::ru(2.0), 2, 0.5, 1);
    CHECK(g.dz == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(g.da == doctest::Approx(-1.0).epsilon(1e-15));

    g = loss_gradients(LossSpec::dru(up2), 2, 0.5, 3);
    CHECK(g.dz == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(g.da == doctest::Approx(1.0).epsilon(1e-15));

    // hinge boundary L == a takes the lower (inactive) branch
    g = loss_gradients(LossSpec::ru(2.0), 2, 1.0, 1);
    CHECK(g.dz == doctest::Approx(1.0));
    CHECK(g.da == doctest::Approx(0.5));
}

TEST_CASE("gradients agree with central differences away from kinks") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0), ua(0.0, 3.0), ug(1.0, 6.0);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 500) {
        const double z = u(rng), y = u(rng), a = ua(rng), gamma = ug(rng);
        const double l = squared_loss(z, y);
        if (std::abs(z - y) < 1e-3 || std::abs(l - a) < 1e-3) continue;
        const Direction d = checked % 2 ? Direction::up : Direction::down;
        for (const LossSpec& spec : {LossSpec::squared(), LossSpec::ru(gamma), LossSpec::dru({gamma, d}),
                                     LossSpec::pinball(0.1 + 0.8 * ua(rng) / 3.0)}) {
            const auto g = loss_gradients(spec, z, a, y);
            const double fdz = (loss_value(spec, z + h, a, y) - loss_value(spec, z - h, a, y)) / (2 * h);
            const double fda = (loss_value(spec, z, a + h, y) - loss_value(spec, z, a - h, y)) / (2 * h);
            CHECK(g.dz == doctest::Approx(fdz).epsilon(1e-6).scale(1.0));
            CHECK(g.da == doctest::Approx(fda).epsilon(1e-6).scale(1.0));
        }
        ++checked;
    }
}

TEST_CASE("gamma = 1 collapses RU and dRU to the squared loss") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0), ua(0.0, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double z = u(rng), y = u(rng), a = ua(rng);
        const double l = squared_loss(z, y);
        worst = std::max(worst, std::abs(ru_loss(z, a, y, 1.0) - l));
        worst = std::max(worst, std::abs(dru_loss(z, a, y, {1.0, Direction::up}) - l));
        worst = std::max(worst, std::abs(dru_loss(z, a, y, {1.0, Direction::down}) - l));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("loss properties") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0), ua(0.0, 4.0), ug(1.0, 10.0);

    SUBCASE("robust terms are non-negative") {
        for (int i = 0; i < 2000; ++i) {
            const double z = u(rng), y = u(rng), a = ua(rng), g = ug(rng);
            const double floor = squared_loss(z, y) / g;
            CHECK(ru_loss(z, a, y, g) >= floor - 1e-12);
            CHECK(dru_loss(z, a, y, {g, Direction::up}) >= floor - 1e-12);
            CHECK(dru_loss(z, a, y, {g, Direction::down}) >= floor - 1e-12);
        }
    }
    SUBCASE("reflection symmetry") {
        for (int i = 0; i < 2000; ++i) {
            const double z = u(rng), y = u(rng), a = ua(rng), g = ug(rng);
            CHECK(dru_loss(z, a, y, {g, Direction::up}) == doctest::Approx(dru_loss(-z, a, -y, {g, Direction::down})));
        }
    }
    SUBCASE("midpoint convexity in z") {
        for (int i = 0; i < 1000; ++i) {
            const double z1 = u(rng), z2 = u(rng), a = ua(rng), y = u(rng), g = ug(rng);
            const double p = 0.05 + 0.9 * ua(rng) / 4.0;
            for (const LossSpec& spec : {LossSpec::squared(), LossSpec::ru(g), LossSpec::dru({g, Direction::up}),
                                         LossSpec::dru({g, Direction::down}), LossSpec::pinball(p)}) {
                const double mid = loss_value(spec, 0.5 * (z1 + z2), a, y);
                CHECK(mid <= 0.5 * (loss_value(spec, z1, a, y) + loss_value(spec, z2, a, y)) + 1e-12);
            }
        }
    }
    SUBCASE("non-decreasing in gamma with the directional hinge active") {
        for (int i = 0; i < 200; ++i) {
            const double y = u(rng), z = y + 0.1 + ua(rng);  // residual > 0 matches d = +1
            const double a = ua(rng) * 0.25 * squared_loss(z, y);
            double prev = -1.0;
            for (int k = 0; k < 50; ++k) {
                const double g = 1.0 + 9.0 * k / 49.0;
                const double v = dru_loss(z, a, y, {g, Direction::up});
                CHECK(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}

TEST_CASE("loss spec validation and meta conversion") {
    CHECK_NOTHROW(LossSpec::dru({1.0, Direction::none}).validate());
    CHECK_THROWS_AS(LossSpec::dru({3.0, Direction::none}).validate(), Error);
    CHECK_THROWS_AS(LossSpec::pinball(1.5).validate(), Error);
    CHECK(LossSpec::ru(2).uses_alpha());
    CHECK_FALSE(LossSpec::pinball(0.3).uses_alpha());
    const auto m = loss_meta({2.5, Direction::up});
    CHECK(m.gamma == 2.5);
    CHECK(m.direction == Direction::down);
    CHECK(loss_kind_from_string("dru") == LossKind::dru);
    CHECK_THROWS_AS(loss_kind_from_string("huber"), Error);
}
