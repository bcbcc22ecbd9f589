#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include <plugsense/config.hpp>

using namespace plugsense;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("empty document gives the defaults") {
    const auto c = parse_config("{}");
    CHECK(c.master_seed == 42);
    CHECK(c.net == NetConfig{});
    CHECK(c.dataset.total_samples() == DatasetSpec{}.total_samples());
    CHECK_FALSE(c.feature_scale.has_value());
}

TEST_CASE("values are read from every section") {
    const auto c = parse_config(R"({
        "master_seed": 7,
        "supply": {"source_resistance": 0.25, "edge_mode": "trailing", "solver": {"max_iterations": 80}},
        "loads": {"hairdryer": {"variants": [{"power_w": 1800}]}},
        "dataset": {"singles_per_class": 3, "two_load_combos": [["fan", "USB"]], "samples_per_two_load": 2},
        "features": {"real_power_scale": 100, "apparent_power_scale": 120},
        "net": {"conv1": {"out_channels": 4}, "normalization": "softmax", "optimizer": "sgd", "epochs": 5},
        "experiments": {"runs": 3, "e1": {"train_per_combo": 2, "test_per_combo": 1}, "e3": {"combos": ["USB+fan"]}}
    })");
    CHECK(c.master_seed == 7);
    CHECK(c.dataset.master_seed == 7);
    CHECK(c.supply.source_resistance == 0.25);
    CHECK(c.supply.edge_mode == EdgeMode::trailing);
    CHECK(c.supply.solver.max_iterations == 80);
    CHECK(c.classes[index_of(LoadClass::hairdryer)].variants[0].at("power_w") == 1800.0);
    CHECK(c.dataset.two_load_combos.size() == 1);
    CHECK(c.dataset.total_samples() == 33 + 2 + 200);
    CHECK(c.scale().real_power == 100.0);
    CHECK(c.net.conv1.channels == 4);
    CHECK(c.net.normalization == Normalization::softmax);
    CHECK(c.net.optimizer == Optimizer::sgd);
    CHECK(c.experiments.runs == 3);
    CHECK(c.experiments.e3_combos == std::vector<std::string>{"USB+fan"});
}

TEST_CASE("unknown keys are rejected with their path") {
    CHECK_THROWS_WITH(parse_config(R"({"supply": {"sourc_resistance": 1}})"),
                      ContainsSubstring("supply.sourc_resistance"));
    CHECK_THROWS_WITH(parse_config(R"({"nett": {}})"), ContainsSubstring("nett"));
    CHECK_THROWS_WITH(parse_config(R"({"net": {"conv2": {"stride": 2}}})"), ContainsSubstring("net.conv2.stride"));
    CHECK_THROWS_AS(parse_config(R"({"loads": {"toaster": {}}})"), ConfigError);
}

TEST_CASE("malformed JSON reports the line") {
    const std::string text = "{\n  \"master_seed\": 1,\n  \"supply\": {\n    \"source_resistance\": ,\n  }\n}";
    CHECK_THROWS_WITH(parse_config(text), ContainsSubstring("line 4"));
}

TEST_CASE("invalid values are config errors") {
    CHECK_THROWS_AS(parse_config(R"({"supply": {"samples_per_period": 10}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"net": {"count_outputs": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"net": {"normalization": "batch"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"net": {"epochs": -1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"master_seed": "x"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"features": {"real_power_scale": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"dataset": {"two_load_combos": [["fan"]]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"loads": {"fan": {"variants": [{"power_w": 40}]}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"schedule": {"ratios": [0.1, 0.2]}})"), ConfigError);
}

TEST_CASE("effective config round trips") {
    const auto c = parse_config(R"({"master_seed": 9, "net": {"learning_rate": 0.002}, "features": {"real_power_scale": 5, "apparent_power_scale": 6}})");
    const auto back = parse_config(config_to_json(c).dump());
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.net == c.net);
}

TEST_CASE("shipped default config matches the built-in defaults") {
    const std::filesystem::path path = std::filesystem::path(PLUGSENSE_SOURCE_DIR) / "configs" / "default.json";
    REQUIRE(std::filesystem::exists(path));
    ToolkitConfig builtin;
    builtin.dataset.master_seed = builtin.master_seed;
    CHECK(config_to_json(load_config(path)) == config_to_json(builtin));
}

TEST_CASE("missing config file") {
    CHECK_THROWS_AS(load_config("/nonexistent/plugsense.json"), ConfigError);
}
