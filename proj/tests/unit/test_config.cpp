#include <stdexcept>
#include <string>

#include "doctest.h"

#include "fedfits/config.hpp"

using namespace fedfits;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({"seed": 7, "dataset": {"kind": "blobs"}, "algorithm": "fedfits"})");
}

std::string error_path(json doc, std::vector<std::string> overrides = {}) {
    try {
        parse_config(std::move(doc), overrides);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<no error>";
}

}  // namespace

TEST_SUITE("config") {
    TEST_CASE("defaults are filled in") {
        const ExperimentConfig c = parse_config(minimal());
        CHECK(c.seed == 7);
        CHECK(c.slots.msl == 5);
        CHECK(c.slots.pft == 2);
        CHECK(c.fitness.beta == doctest::Approx(0.1));
        CHECK(c.fitness.dynamic_alpha());
        CHECK(c.strategy.kind == StrategyKind::fedfits);
    }

    TEST_CASE("overrides win and show up in the echo") {
        const ExperimentConfig c = parse_config(minimal(), {"fitness.beta=0.5"});
        CHECK(c.fitness.beta == doctest::Approx(0.5));
        CHECK(config_to_json(c)["fitness"]["beta"] == 0.5);
        const ExperimentConfig named = parse_config(minimal(), {"name=my run"});
        CHECK(named.name == "my run");
    }

    TEST_CASE("errors name the json path") {
        CHECK(error_path(minimal(), {"fitness.beta=1.5"}) == "fitness.beta");
        CHECK(error_path(minimal(), {"fitness.bogus=1"}) == "fitness.bogus");
        CHECK(error_path(minimal(), {"partition.num_clients=\"ten\""}) == "partition.num_clients");
        CHECK(error_path(minimal(), {"slots.msl=0"}) == "slots.msl");
        CHECK(error_path(minimal(), {"algorithm=fedbest"}) == "algorithm");
        CHECK(error_path(minimal(), {"train.batch_size=-3"}) == "train.batch_size");
        CHECK_THROWS_WITH_AS(parse_config(minimal(), {"fitness.beta=1.5"}),
                             doctest::Contains("fitness.beta"), ConfigError);
    }

    TEST_CASE("echo parses back to the same config") {
        const ExperimentConfig c =
            parse_config(minimal(), {"fitness.alpha=0.3", "train.batch_size=\"full\"",
                                     "attack.kind=label_flip", "attack.last_m=4",
                                     "target_accuracy=0.8", "aggregator.kind=krum"});
        const json echo = config_to_json(c);
        const ExperimentConfig back = parse_config(echo);
        CHECK(config_to_json(back) == echo);
        CHECK(config_digest(back) == config_digest(c));
        CHECK(config_digest(c).size() == 64);
        CHECK(config_digest(parse_config(minimal())) != config_digest(c));
    }

    TEST_CASE("malformed overrides") {
        json doc = minimal();
        CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
        apply_override(doc, "train.learning_rate=0.25");
        CHECK(doc["train"]["learning_rate"] == 0.25);
    }
}
