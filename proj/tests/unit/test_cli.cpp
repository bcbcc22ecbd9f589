#include "catch_amalgamated.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <plugsense/cli.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "plugsense");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = plugsense::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "plugsense_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path small_config() {
    const auto path = workdir() / "small.json";
    if (!fs::exists(path))
        std::ofstream(path) << R"({
  "dataset": {"singles_per_class": 3, "two_load_combos": [["fan", "laptop"]], "samples_per_two_load": 3,
              "three_load_combos": []},
  "net": {"conv1": {"out_channels": 2}, "conv2": {"out_channels": 2}, "fc1_width": 8, "fc2_width": 6, "epochs": 2},
  "experiments": {"runs": 2, "e1": {"train_per_combo": 2, "test_per_combo": 1},
                  "e2": {"singles_train": 2, "multis_train": 1},
                  "e3": {"train_per_combo": 2, "runs_per_combo": 1},
                  "mot": {"singles_train": 2, "singles_test": 1}}
})";
    return path;
}

fs::path small_dataset() {
    const auto path = workdir() / "small.jsonl";
    if (!fs::exists(path)) {
        const auto r = run({"gen", "--config", small_config().string(), "--out", path.string()});
        REQUIRE(r.code == 0);
    }
    return path;
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"gen", "--help"}).code == 0);
    const auto v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(PLUGSENSE_VERSION) != std::string::npos);
}

TEST_CASE("usage errors exit 1 with help") {
    CHECK(run({}).code == 1);
    const auto r = run({"gen"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--out") != std::string::npos);
    CHECK(run({"exp", "e9", "--dataset", "x"}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("gen writes the dataset, a manifest and per-combo counts") {
    const auto path = workdir() / "gen.jsonl";
    const auto r = run({"gen", "--config", small_config().string(), "--out", path.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("fan+laptop,3\n") != std::string::npos);
    CHECK(r.out.find("total,36\n") != std::string::npos);
    CHECK(plugsense::load(path).size() == 36);
    const auto m = nlohmann::json::parse(read_all(path.string() + ".manifest.json"));
    CHECK(m.at("master_seed") == 42);
    CHECK(m.at("command") == "gen");
}

TEST_CASE("gen is byte-identical for the same seed and differs for another") {
    const auto a = workdir() / "a.jsonl", b = workdir() / "b.jsonl", c = workdir() / "c.jsonl";
    REQUIRE(run({"gen", "--config", small_config().string(), "--out", a.string(), "--seed", "5", "--jobs", "1"}).code == 0);
    REQUIRE(run({"gen", "--config", small_config().string(), "--out", b.string(), "--seed", "5", "--jobs", "3"}).code == 0);
    REQUIRE(run({"gen", "--config", small_config().string(), "--out", c.string(), "--seed", "6"}).code == 0);
    CHECK(read_all(a) == read_all(b));
    CHECK(read_all(a) != read_all(c));
}

TEST_CASE("config from the environment") {
    const auto path = workdir() / "env.jsonl";
    ::setenv(plugsense::cli::kConfigEnv, small_config().c_str(), 1);
    const auto r = run({"gen", "--out", path.string()});
    ::unsetenv(plugsense::cli::kConfigEnv);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("total,36\n") != std::string::npos);
}

TEST_CASE("bad config is a usage error") {
    const auto bad = workdir() / "bad.json";
    std::ofstream(bad) << R"({"net": {"epochz": 3}})";
    const auto r = run({"gen", "--config", bad.string(), "--out", (workdir() / "never.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("net.epochz") != std::string::npos);
}

TEST_CASE("inspect prints one sample") {
    const auto r = run({"inspect", "--dataset", small_dataset().string(), "--index", "33"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "fan+laptop");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 19);
    }
    CHECK(rows == 14);
    CHECK(run({"inspect", "--dataset", small_dataset().string(), "--index", "36"}).code == 1);
    CHECK(run({"inspect", "--dataset", small_dataset().string(), "--index", "-1"}).code == 1);
    CHECK(run({"inspect", "--dataset", (workdir() / "nope.jsonl").string(), "--index", "0"}).code == 3);
}

TEST_CASE("unwritable output is an IO error") {
    const auto r = run({"gen", "--config", small_config().string(), "--out", (workdir() / "no" / "such" / "x.jsonl").string()});
    CHECK(r.code == 3);
}

TEST_CASE("experiments write a run directory") {
    for (std::string name : {"e1", "e2", "e3", "mot"}) {
        const auto dir = workdir() / ("run-" + name);
        const auto r = run({"exp", name, "--config", small_config().string(), "--dataset", small_dataset().string(),
                            "--out", dir.string()});
        INFO(name << ": " << r.err);
        REQUIRE(r.code == 0);
        CHECK(fs::exists(dir / "report.csv"));
        CHECK(fs::exists(dir / "summary.json"));
        const auto m = nlohmann::json::parse(read_all(dir / "manifest.json"));
        CHECK(m.at("command") == "exp " + name);
        CHECK(nlohmann::json::parse(read_all(dir / "summary.json")).at("experiment") == name);
    }
    CHECK(fs::exists(workdir() / "run-e1" / "grid_strict.csv"));
    CHECK(fs::exists(workdir() / "run-e3" / "grid_at_least_one.csv"));
}

TEST_CASE("experiment summaries ignore --jobs") {
    const auto a = workdir() / "jobs1", b = workdir() / "jobs2";
    REQUIRE(run({"exp", "e1", "--config", small_config().string(), "--dataset", small_dataset().string(), "--out", a.string(), "--jobs", "1"}).code == 0);
    REQUIRE(run({"exp", "e1", "--config", small_config().string(), "--dataset", small_dataset().string(), "--out", b.string(), "--jobs", "2"}).code == 0);
    CHECK(read_all(a / "summary.json") == read_all(b / "summary.json"));
    CHECK(read_all(a / "report.csv") == read_all(b / "report.csv"));
}

TEST_CASE("too few samples exit 4") {
    const auto r = run({"exp", "e1", "--config", small_config().string(), "--dataset", small_dataset().string(),
                        "--out", (workdir() / "insufficient").string(), "--runs", "1", "--seed", "1"});
    CHECK(r.code == 0);
    const auto big = workdir() / "big.json";
    std::ofstream(big) << R"({"net": {"epochs": 1}, "experiments": {"e1": {"train_per_combo": 5, "test_per_combo": 5}}})";
    const auto r2 = run({"exp", "e1", "--config", big.string(), "--dataset", small_dataset().string(), "--out",
                         (workdir() / "insufficient2").string()});
    CHECK(r2.code == 4);
}
