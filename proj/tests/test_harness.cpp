#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "dru/error.hpp"
#include "dru/harness.hpp"
#include "dru/robustness.hpp"
#include "dru/sampling.hpp"

using namespace dru;

namespace {

struct Toy {
    std::vector<Dataset> pops;
    std::vector<BiasSpec> biases;
};

Toy toy(std::size_t replicates, double gamma, std::size_t targets = 2, std::uint64_t seed = 1) {
    Toy out;
    for (std::size_t r = 0; r < replicates; ++r) {
        PopulationSpec spec;
        spec.covariates = {{"gender", 2}, {"age", 3}, {"past_vote", 4}};
        spec.n_targets = targets;
        spec.n_population = 20000;
        spec.seed = seed * 1000 + r;
        out.pops.push_back(generate_population(spec));
        std::vector<Direction> d;
        for (std::size_t t = 0; t < targets; ++t) d.push_back(t % 2 ? Direction::down : Direction::up);
        out.biases.push_back({std::vector<double>(targets, gamma), d, 2000, seed * 77 + r});
    }
    return out;
}

}  // namespace

TEST_CASE("b-score anchors") {
    const std::vector<double> truth{0.3, 0.2, 0.1}, unw{0.25, 0.26, 0.1};
    CHECK(b_score(truth, truth, unw) == 1.0);
    CHECK(b_score(truth, unw, unw) == 0.0);
    const std::vector<double> t2{0.5, 0.5}, u2{0.4, 0.45}, h2{0.45, 0.55};
    CHECK(b_score(t2, h2, u2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("b-score errors and bound") {
    const std::vector<double> t{0.3, 0.2}, h{0.1, 0.1};
    try {
        b_score(t, h, t);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::undefined_score);
    }
    const std::vector<double> shorter{0.1};
    CHECK_THROWS_AS(b_score(t, shorter, h), Error);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> a(4), b(4), c(4);
        for (int k = 0; k < 4; ++k) {
            a[k] = u(rng);
            b[k] = u(rng);
            c[k] = u(rng);
        }
        CHECK(b_score(a, b, c) <= 1.0);
    }
}

TEST_CASE("summaries") {
    std::vector<SweepRecord> recs;
    for (int r = 0; r < 2; ++r) {
        SweepRecord rec;
        rec.replicate = r;
        rec.covariate_subset = "age";
        rec.method = "nn_plain";
        rec.run_b = r ? -0.5 : 0.5;
        recs.push_back(rec);
        rec.method = "dru_informed";
        rec.run_b = 1.0;
        recs.push_back(rec);
    }
    const auto s = summarize(recs);
    REQUIRE(s.size() == 2);
    CHECK(s[0].method == "nn_plain");
    CHECK(s[0].mean_b == 0.0);
    CHECK(s[0].freq_b_positive == 0.5);
    CHECK(s[1].mean_b == 1.0);
    CHECK(s[1].freq_b_positive == 1.0);

    recs[0].ok = false;
    const auto s2 = summarize(recs);
    CHECK(s2[0].runs == 1);
    CHECK(s2[0].mean_b == -0.5);

    const auto hist = b_histogram(recs, 4);
    CHECK(hist.size() == 8);
    std::size_t counted = 0;
    for (const auto& bin : hist) counted += bin.count;
    CHECK(counted == 3);
}

TEST_CASE("method meta variants") {
    const std::vector<MetaInfo> informed{{1.5, Direction::up}, {2.0, Direction::down}, {3.0, Direction::up}};
    CHECK(method_meta(MethodKind::dru_informed, informed)[0].gamma == 1.5);
    const auto wg = method_meta(MethodKind::dru_wrong_gamma, informed);
    CHECK(wg[0].gamma == 3.0);
    CHECK(wg[2].gamma == 1.5);
    CHECK(wg[0].direction == Direction::up);
    const auto wd = method_meta(MethodKind::dru_wrong_d, informed);
    CHECK(wd[1].direction == Direction::up);
    CHECK(wd[1].gamma == 2.0);
    const auto wb = method_meta(MethodKind::dru_wrong_both, informed);
    CHECK(wb[0].gamma == 3.0);
    CHECK(wb[0].direction == Direction::down);

    CHECK(pinball_level({3.0, Direction::up}) == 0.75);
    CHECK(pinball_level({3.0, Direction::down}) == 0.25);
    CHECK(pinball_level({1.0, Direction::none}) == 0.5);
    CHECK_THROWS_AS(method_kind_from_string("mrp"), Error);
    for (auto k : {MethodKind::dru_informed, MethodKind::pinball, MethodKind::dru_wrong_both})
        CHECK(method_kind_from_string(to_string(k)) == k);
}

TEST_CASE("regression baseline reproduces cell means on a saturated design") {
    // one covariate: ridge regression on its one-hot equals per-cell means
    Schema schema{{{"g", 3}}, {"t"}};
    Dataset sample(schema);
    const double share[3] = {0.2, 0.5, 0.9};
    for (std::uint16_t c = 0; c < 3; ++c)
        for (int i = 0; i < 100; ++i) {
            const std::vector<std::uint16_t> lv{c};
            const std::vector<std::uint8_t> y{static_cast<std::uint8_t>(i < share[c] * 100 ? 1 : 0)};
            sample.add_row(lv, y);
        }
    const CellTable table{{"g"}, {{0, 0.5}, {1, 0.3}, {2, 0.2}}};
    const auto fit = fit_and_poststratify(MethodKind::regression_poststrat, {1.0, Direction::none}, sample, table, 0,
                                          SweepOptions{}, 1);
    CHECK(fit.y_hat == doctest::Approx(0.5 * 0.2 + 0.3 * 0.5 + 0.2 * 0.9).epsilon(1e-5));
    CHECK(fit.unseen_cells == 0);
}

TEST_CASE("sweep bookkeeping") {
    const auto t = toy(2, 2.0);
    const std::vector<std::vector<std::string>> subsets{{"past_vote"}, {"gender", "age"}};
    const std::vector<MethodSpec> methods{{MethodKind::nn_plain, {}}, {MethodKind::dru_informed, {}}};
    SweepOptions opt;
    opt.seed = 5;
    opt.train.max_epochs = 5;

    SUBCASE("one run gives one record per target") {
        const std::vector<Dataset> p{t.pops[0]};
        const std::vector<BiasSpec> b{t.biases[0]};
        const std::vector<std::vector<std::string>> s{subsets[0]};
        const std::vector<MethodSpec> m{methods[0]};
        const auto res = run_sweep(p, b, s, m, opt);
        CHECK(res.records.size() == 2);
        CHECK(res.run_count() == 1);
    }
    SUBCASE("full cross product, deterministic and independent of jobs") {
        const auto a = run_sweep(t.pops, t.biases, subsets, methods, opt);
        CHECK(a.records.size() == 16);
        CHECK(a.failed_run_count() == 0);
        opt.jobs = 3;
        const auto b = run_sweep(t.pops, t.biases, subsets, methods, opt);
        REQUIRE(b.records.size() == a.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].y_hat == b.records[i].y_hat);
            CHECK(a.records[i].run_b == b.records[i].run_b);
            CHECK(a.records[i].method == b.records[i].method);
            CHECK(a.records[i].run_b <= 1.0);
        }
        const auto s = summarize(a.records);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].mean_b == a.summary[i].mean_b);
    }
    SUBCASE("mismatched inputs are configuration errors") {
        const std::vector<BiasSpec> one{t.biases[0]};
        CHECK_THROWS_AS(run_sweep(t.pops, one, subsets, methods, opt), Error);
        const std::vector<MethodSpec> bad{{MethodKind::dru_informed, {{2.0, Direction::up}}}};
        CHECK_THROWS_AS(run_sweep(t.pops, t.biases, subsets, bad, opt), Error);
    }
    SUBCASE("an unknown covariate fails the sweep up front") {
        const std::vector<std::vector<std::string>> s{{"income"}};
        CHECK_THROWS_AS(run_sweep(t.pops, t.biases, s, methods, opt), Error);
    }
}

TEST_CASE("plain network on unbiased samples removes no bias on average") {
    const auto t = toy(30, 1.0, 3, 9);
    const std::vector<std::vector<std::string>> subsets{{"past_vote"}};
    const std::vector<MethodSpec> methods{{MethodKind::nn_plain, {}}};
    SweepOptions opt;
    opt.seed = 11;
    const auto res = run_sweep(t.pops, t.biases, subsets, methods, opt);
    REQUIRE(res.summary.size() == 1);
    CHECK(res.summary[0].runs == 30);
    CHECK(res.summary[0].mean_b > -0.2);
}
