#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
//   plugsense gen     --out FILE [--config FILE] [--seed N] [--jobs N]
//   plugsense exp     {e1,e2,e3,mot} --dataset FILE [--out DIR] [--runs N] ...
//   plugsense inspect --dataset FILE --index N
//
// Exit codes: 0 ok, 1 config/usage, 2 simulation or training failure,
// 3 I/O, 4 insufficient samples.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plugsense/config.hpp"
#include "plugsense/dataset.hpp"
#include "plugsense/error.hpp"
#include "plugsense/eval.hpp"
#include "plugsense/parallel.hpp"

#ifndef PLUGSENSE_VERSION
#define PLUGSENSE_VERSION "0.0.0"
#endif

namespace plugsense::cli {

enum ExitCode : int { ok = 0, usage = 1, simulation = 2, io = 3, insufficient = 4 };

inline constexpr const char* kConfigEnv = "PLUGSENSE_CONFIG";

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
};

/// Config precedence: --config, then $PLUGSENSE_CONFIG, then built-in
/// defaults; flags then override individual values.
inline ToolkitConfig resolve_config(const CommonOptions& o, std::string& source) {
    source = o.config;
    if (source.empty())
        if (const char* env = std::getenv(kConfigEnv); env && *env) source = env;
    ToolkitConfig c;
    if (!source.empty()) c = load_config(source);
    if (o.seed) {
        c.master_seed = *o.seed;
        c.dataset.master_seed = *o.seed;
    }
    return c;
}

inline std::string shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline nlohmann::json manifest(const std::string& command, const std::string& config_source,
                               const ToolkitConfig& c) {
    return {{"tool", "plugsense"},
            {"version", PLUGSENSE_VERSION},
            {"command", command},
            {"config_source", config_source.empty() ? nlohmann::json(nullptr) : nlohmann::json(config_source)},
            {"master_seed", c.master_seed},
            {"config", config_to_json(c)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline int cmd_gen(const CommonOptions& o, const std::string& out_path, std::ostream& out) {
    std::string source;
    const ToolkitConfig c = resolve_config(o, source);
    const Dataset ds = generate(c.dataset, c.context(), o.jobs.value_or(default_jobs()));
    save(ds, out_path);
    write_text(out_path + ".manifest.json", manifest("gen", source, c).dump(2) + "\n");
    for (const auto& [combo, members] : ds.groups()) out << combo << ',' << members.size() << '\n';
    out << "total," << ds.size() << '\n';
    return ok;
}

struct ExpOptions {
    std::string name;
    std::string dataset;
    std::string out_dir;
    std::optional<std::size_t> runs;
};

inline int cmd_exp(const CommonOptions& o, const ExpOptions& e, std::ostream& out) {
    std::string source;
    const ToolkitConfig c = resolve_config(o, source);
    const Dataset ds = load(e.dataset);
    const auto& d = c.experiments;
    ExperimentSettings s;
    s.net = c.net;
    s.scale = c.scale();
    s.seed = c.master_seed;
    s.jobs = o.jobs.value_or(default_jobs());
    s.runs = e.runs.value_or(e.name == "e3" ? d.e3_runs_per_combo : d.runs);
    if (s.runs == 0) throw ConfigError("--runs must be > 0");

    const std::filesystem::path dir =
        e.out_dir.empty() ? std::filesystem::path("runs") / (e.name + "-seed" + std::to_string(c.master_seed))
                          : std::filesystem::path(e.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory '" + dir.string() + "': " + ec.message());

    nlohmann::json sum;
    if (e.name == "e1" || e.name == "e2") {
        const EvalReport r = e.name == "e1" ? experiment_e1(ds, s, SplitPlan::uniform(d.e1_train, d.e1_test))
                                            : experiment_e2(ds, s, e2_plan(d.e2_singles_train, d.e2_multis_train));
        export_report(r, dir / "report.csv", ExportFormat::csv);
        export_report(r, dir / "grid_strict.csv", ExportFormat::grid, "strict");
        export_report(r, dir / "grid_class_detection.csv", ExportFormat::grid, "class_detection");
        sum = summary(r);
    } else if (e.name == "e3") {
        const OmissionReport r = experiment_e3_omit(ds, s, d.e3_train_per_combo, d.e3_combos);
        export_report(r, dir / "report.csv", ExportFormat::csv);
        export_report(r, dir / "grid_at_least_one.csv", ExportFormat::grid);
        sum = summary(r);
    } else {
        const MotReport r = experiment_e_mot(ds, s, d.mot_singles_train, d.mot_singles_test);
        export_report(r, dir / "report.csv", ExportFormat::csv);
        export_report(r, dir / "grid.csv", ExportFormat::grid);
        sum = summary(r);
    }
    write_text(dir / "summary.json", sum.dump(2) + "\n");
    nlohmann::json m = manifest("exp " + e.name, source, c);
    m["dataset"] = e.dataset;
    m["runs"] = s.runs;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    out << sum.dump(2) << '\n';
    return ok;
}

inline int cmd_inspect(const std::string& dataset, long long index, std::ostream& out) {
    const Dataset ds = load(dataset);
    if (index < 0 || static_cast<std::size_t>(index) >= ds.size())
        throw InvalidArgument("index " + std::to_string(index) + " out of range [0, " + std::to_string(ds.size()) + ")");
    const Sample& s = ds.samples[static_cast<std::size_t>(index)];
    out << s.combo_id << '\n';
    for (std::size_t r = 0; r < kRows; ++r) {
        for (std::size_t col = 0; col < kCols; ++col) out << (col ? "," : "") << shortest(s.matrices.real_power(r, col));
        out << '\n';
    }
    return ok;
}

/// Maps toolkit errors onto the exit-code taxonomy.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InsufficientSamples*>(&e)) return insufficient;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CorruptRecord*>(&e) ||
        dynamic_cast<const SchemaVersionMismatch*>(&e))
        return io;
    if (dynamic_cast<const NonConvergence*>(&e) || dynamic_cast<const NumericalOverflow*>(&e) ||
        dynamic_cast<const DivergedToNaN*>(&e))
        return simulation;
    return usage;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Phase-cut probing simulator and multi-label load classifier"};
    app.name("plugsense");
    app.set_version_flag("--version", std::string(PLUGSENSE_VERSION));
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub, bool with_seed) {
        sub->add_option("--config", common.config, "Config file (JSON); defaults to $PLUGSENSE_CONFIG, then built-ins")
            ->envname(kConfigEnv);
        if (with_seed) sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
        sub->add_option("--jobs", common.jobs, "Worker threads (default: available cores)")
            ->check(CLI::PositiveNumber);
    };

    auto* gen = app.add_subcommand("gen", "Simulate the dataset and write it as JSON lines");
    std::string gen_out;
    add_common(gen, true);
    gen->add_option("--out", gen_out, "Dataset file to write")->required();

    auto* exp = app.add_subcommand("exp", "Run an experiment (e1, e2, e3, mot) on a dataset");
    ExpOptions eo;
    add_common(exp, true);
    exp->add_option("name", eo.name, "Experiment: e1, e2, e3 or mot")
        ->required()
        ->check(CLI::IsMember({"e1", "e2", "e3", "mot"}));
    exp->add_option("--dataset", eo.dataset, "Dataset file written by gen")->required();
    exp->add_option("--out", eo.out_dir, "Run directory (default: runs/<name>-seed<seed>)");
    exp->add_option("--runs", eo.runs, "Runs (runs per omitted combination for e3)");

    auto* inspect = app.add_subcommand("inspect", "Print one sample's real-power matrix");
    std::string inspect_ds;
    long long index = 0;
    inspect->add_option("--dataset", inspect_ds, "Dataset file")->required();
    inspect->add_option("--index", index, "Sample index")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; everything else is a usage error.
        const int rc = app.exit(e, out, err);
        if (rc != 0 && !dynamic_cast<const CLI::CallForHelp*>(&e)) {
            CLI::App* failing = exp->parsed() ? exp : gen->parsed() ? gen : inspect->parsed() ? inspect : &app;
            err << failing->help();
            return usage;
        }
        return rc == 0 ? ok : usage;
    }

    try {
        if (gen->parsed()) return cmd_gen(common, gen_out, out);
        if (exp->parsed()) return cmd_exp(common, eo, out);
        return cmd_inspect(inspect_ds, index, out);
    } catch (const std::exception& e) {
        err << "plugsense: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace plugsense::cli
