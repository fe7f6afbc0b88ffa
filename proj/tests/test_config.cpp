#include <doctest.h>

#include <json.hpp>

#include "memo/config.hpp"

using namespace memo;
using nlohmann::json;

namespace {

json minimal_config() {
    return json::parse(R"({
      "seed": 42,
      "dataset": {
        "generator": {"kind": "two_gaussians", "n": 20, "separation": 2.0, "sigma": 0.5, "seed": 1},
        "noise_fraction": 0.1,
        "noise_seed": 2
      },
      "subsample": {"k": 8, "m_fraction": 0.7, "seed": 3},
      "ladder": [
        {"depth": 1, "width": 4,
         "optimizer": {"peak_lr": 0.1, "epochs": 3, "batch_size": 8}},
        {"depth": 1, "width": 12,
         "optimizer": {"peak_lr": 0.1, "epochs": 3, "batch_size": 8}}
      ]
    })");
}

}  // namespace

TEST_CASE("canonical serialisation is a fixed point of parsing") {
    const auto cfg = config::parse_config(minimal_config());
    const json canon = config::canonical_json(cfg);
    const auto reparsed = config::parse_config(canon);
    CHECK(config::canonical_json(reparsed) == canon);
    CHECK(config::plan_hash(cfg) == config::plan_hash(reparsed));
}

TEST_CASE("plan hash is stable and sensitive to content") {
    const auto cfg = config::parse_config(minimal_config());
    const std::string h1 = config::plan_hash(cfg);
    CHECK(h1.size() == 16);
    CHECK(h1 == config::plan_hash(cfg));

    auto other = minimal_config();
    other["subsample"]["k"] = 9;
    CHECK(config::plan_hash(config::parse_config(other)) != h1);
}

TEST_CASE("validation errors carry the field path") {
    auto j = minimal_config();
    j["subsample"]["m_fraction"] = 1.5;
    try {
        config::parse_config(j);
        FAIL("expected ConfigParseError");
    } catch (const config::ConfigParseError& e) {
        CHECK(std::string(e.what()).find("subsample.m_fraction") != std::string::npos);
    }

    j = minimal_config();
    j["ladder"][1]["optimizer"].erase("epochs");
    try {
        config::parse_config(j);
        FAIL("expected ConfigParseError");
    } catch (const config::ConfigParseError& e) {
        CHECK(std::string(e.what()).find("ladder[1].optimizer") != std::string::npos);
    }

    j = minimal_config();
    j["dataset"]["generator"]["kind"] = "mnist";
    CHECK_THROWS_AS(config::parse_config(j), config::ConfigParseError);

    j = minimal_config();
    j["distill"] = {{"teacher_index", 5}};
    CHECK_THROWS_AS(config::parse_config(j), config::ConfigParseError);
}

TEST_CASE("m_fraction of 1 is rejected before any training") {
    auto j = minimal_config();
    j["subsample"]["m_fraction"] = 1.0;
    const auto cfg = config::parse_config(j);
    const auto dataset = config::build_dataset(cfg.dataset);
    CHECK_THROWS_AS(config::build_plan(cfg, dataset), config::ConfigParseError);
}

TEST_CASE("build_plan wires dataset dimensions into the ladder") {
    const auto cfg = config::parse_config(minimal_config());
    const auto dataset = config::build_dataset(cfg.dataset);
    CHECK(dataset.size() == 20);
    int flagged = 0;
    for (auto f : dataset.noise_flag) flagged += f;
    CHECK(flagged == 2);  // floor(0.1 * 20)

    const auto plan = config::build_plan(cfg, dataset);
    CHECK(plan.subsample.m == 14);  // ceil(0.7 * 20)
    CHECK(plan.subsample.k == 8);
    REQUIRE(plan.ladder.size() == 2);
    CHECK(plan.ladder[0].spec.input_dim == 2);
    CHECK(plan.ladder[0].spec.num_classes == 2);
    CHECK(plan.ladder[0].spec.widths == std::vector<int>{4});
    CHECK(nn::param_count(plan.ladder[0].spec) < nn::param_count(plan.ladder[1].spec));
}

TEST_CASE("ladder must be strictly ordered by parameter count") {
    auto j = minimal_config();
    j["ladder"][1]["width"] = 4;  // same size as entry 0
    const auto cfg = config::parse_config(j);
    const auto dataset = config::build_dataset(cfg.dataset);
    CHECK_THROWS_AS(config::build_plan(cfg, dataset), ensemble::PlanError);
}

TEST_CASE("duplicates must reference clean examples") {
    auto j = minimal_config();
    // find a noise-flagged id and try to duplicate it
    const auto cfg0 = config::parse_config(j);
    const auto base = config::build_dataset(cfg0.dataset);
    int noisy_id = -1;
    for (int i = 0; i < base.size(); ++i)
        if (base.noise_flag[size_t(i)]) noisy_id = i;
    REQUIRE(noisy_id >= 0);

    j["dataset"]["duplicates"] = {{"ids", {noisy_id}}};
    const auto cfg = config::parse_config(j);
    CHECK_THROWS_AS(config::build_dataset(cfg.dataset), config::ConfigParseError);
}
