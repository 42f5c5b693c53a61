#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "dru/config.hpp"
#include "dru/error.hpp"
#include "dru/io.hpp"
#include "dru/sampling.hpp"

using namespace dru;
using nlohmann::json;

namespace {

Dataset tiny() {
    PopulationSpec spec;
    spec.covariates = {{"gender", 2}, {"age", 3}};
    spec.n_targets = 2;
    spec.n_population = 40;
    spec.seed = 3;
    return generate_population(spec);
}

}  // namespace

TEST_CASE("doubles round-trip through their text form") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.125, 0.0}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("dataset CSV round trip") {
    const auto d = tiny();
    const auto text = dataset_to_csv(d);
    CHECK(text.rfind("gender,age,coalition_1,coalition_2,cell_id\n", 0) == 0);
    CHECK(dataset_from_csv(text, d.schema()) == d);
}

TEST_CASE("dataset CSV errors name the problem") {
    const auto d = tiny();
    try {
        dataset_from_csv("gender,age,coalition_1,cell_id\n0,0,1,0\n", d.schema());
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(std::string(e.what()).find("coalition_2") != std::string::npos);
    }
    CHECK_THROWS_AS(dataset_from_csv("gender,age,coalition_1,coalition_2,cell_id\n0,7,1,0,0\n", d.schema()), Error);
    CHECK_THROWS_AS(dataset_from_csv("gender,age,coalition_1,coalition_2,cell_id\n0,1,2,0,1\n", d.schema()), Error);
    // cell_id must agree with the covariates
    CHECK_THROWS_AS(dataset_from_csv("gender,age,coalition_1,coalition_2,cell_id\n0,1,1,0,5\n", d.schema()), Error);
}

TEST_CASE("provenance and model JSON round trips") {
    Provenance p{{{2.0, 1.5}, {Direction::up, Direction::down}, 300, 99}, 1, {"note"}};
    const auto back = provenance_from_json(provenance_to_json(p));
    CHECK(back.bias.gamma_true == p.bias.gamma_true);
    CHECK(back.bias.d_true == p.bias.d_true);
    CHECK(back.bias.seed == 99);
    CHECK(back.target_index == 1);
    CHECK(back.warnings == p.warnings);

    const std::vector<std::size_t> hidden{4, 4};
    TrainedModel m{Mlp(make_architecture(5, hidden, Activation::identity), 1),
                   Mlp(make_architecture(5, hidden, Activation::relu), 2), LossSpec::dru({2.0, Direction::down})};
    std::vector<std::string> cov;
    const auto doc = model_to_json(m, {"gender", "age"});
    const auto m2 = model_from_json(json::parse(doc.dump()), &cov);
    CHECK(m2.h == m.h);
    CHECK(*m2.alpha == *m.alpha);
    CHECK(m2.loss.kind == LossKind::dru);
    CHECK(m2.loss.meta.direction == Direction::down);
    CHECK(cov == std::vector<std::string>{"gender", "age"});

    auto bad = doc;
    bad["version"] = 99;
    CHECK_THROWS_AS(model_from_json(bad), Error);
}

TEST_CASE("run config parsing") {
    SUBCASE("defaults survive a JSON round trip") {
        const auto c = RunConfig::defaults();
        const auto back = RunConfig::from_json(c.to_json(true));
        CHECK(back.to_json(true) == c.to_json(true));
        CHECK(back.hash() == c.hash());
        CHECK(c.hash().size() == 16);
    }
    SUBCASE("unknown keys are rejected at every level") {
        CHECK_THROWS_AS(RunConfig::from_json(json{{"sed", 1}}), Error);
        CHECK_THROWS_AS(RunConfig::from_json(json{{"train", {{"lr", 0.1}}}}), Error);
        try {
            RunConfig::from_json(json{{"population", {{"n_rows", 5}}}});
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("n_rows") != std::string::npos);
        }
    }
    SUBCASE("runtime keys do not change the hash") {
        auto a = RunConfig::defaults();
        auto b = a;
        b.jobs = 7;
        b.output_dir = "elsewhere";
        CHECK(a.hash() == b.hash());
        b.seed = 1;
        CHECK_FALSE(a.hash() == b.hash());
    }
    SUBCASE("validation") {
        auto c = RunConfig::defaults();
        c.covariate_subsets = {{"shoe_size"}};
        CHECK_THROWS_AS(c.validate(), Error);
        c = RunConfig::defaults();
        c.bias.gamma_true = {0.5, 2, 2, 2, 2};
        CHECK_THROWS_AS(c.validate(), Error);
        c = RunConfig::defaults();
        c.train.batch_size = 0;
        CHECK_THROWS_AS(c.validate(), Error);
        CHECK_NOTHROW(RunConfig::defaults().validate());
    }
    SUBCASE("type errors are parse errors") {
        try {
            RunConfig::from_json(json{{"replicates", "many"}});
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse);
        }
    }
}

TEST_CASE("manifests load as configs") {
    const auto dir = std::filesystem::temp_directory_path() / "dru_io_config_test";
    std::filesystem::remove_all(dir);
    ensure_directory(dir);
    auto c = RunConfig::defaults();
    c.seed = 42;
    json manifest{{"manifest_version", 1}, {"config", c.to_json()}};
    write_file(dir / "manifest.json", manifest.dump(2));
    CHECK(load_run_config(dir / "manifest.json").hash() == c.hash());
    write_file(dir / "config.json", c.to_json().dump());
    CHECK(load_run_config(dir / "config.json").seed == 42);
    CHECK_THROWS_AS(load_run_config(dir / "missing.json"), Error);
    write_file(dir / "broken.json", "{ not json");
    try {
        load_run_config(dir / "broken.json");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse);
    }
    std::filesystem::remove_all(dir);
}
