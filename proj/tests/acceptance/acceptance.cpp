// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Long (tens of minutes on one core); the heavy parts share one reduced
// dataset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <plugsense/cli.hpp>
#include <plugsense/eval.hpp>

using namespace plugsense;
namespace fs = std::filesystem;

namespace {

// Criterion 4 needs the reports of later ones, so lines are collected and
// printed in order at the end; progress goes to stderr.
std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool pass, const std::string& detail) {
    std::cerr << "criterion " << id << (pass ? " passed" : " failed") << std::endl;
    results[id] = {pass, detail};
}

// Runs one check; an exception counts as a failure.
void criterion(int id, const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::pair<bool, std::string> r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream d;
    d << r.second << " [" << static_cast<long>(secs) << " s]";
    report(id, r.first, d.str());
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "plugsense");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (rc != 0) std::cerr << err.str();
    return rc;
}

double max_rel(const Grid& got, const Grid& want) {
    double worst = 0.0;
    for (std::size_t k = 0; k < kCells; ++k)
        worst = std::max(worst, std::abs(got.cells[k] - want.cells[k]) / std::max(std::abs(want.cells[k]), 1e-12));
    return worst;
}

Grid solo_plus_solo(const ClassTable& t, LoadClass a, LoadClass b, const SupplyConfig& supply,
                    const DimmingSchedule& sched, Grid& pair) {
    std::vector<LoadInstance> ba{nominal_instance(a, t[index_of(a)], 0, supply)};
    std::vector<LoadInstance> bb{nominal_instance(b, t[index_of(b)], 0, supply)};
    std::vector<LoadInstance> both{nominal_instance(a, t[index_of(a)], 0, supply),
                                   nominal_instance(b, t[index_of(b)], 0, supply)};
    const Grid pa = run_probe(ba, supply, sched).real_power;
    const Grid pb = run_probe(bb, supply, sched).real_power;
    pair = run_probe(both, supply, sched).real_power;
    Grid sum;
    for (std::size_t k = 0; k < kCells; ++k) sum.cells[k] = pa.cells[k] + pb.cells[k];
    return sum;
}

// Eleven resistors whose singles, pairs and triples have well separated total
// power, so every combination is identifiable from magnitude alone.
const std::vector<double> kResistorWatts = {187.2, 1238.1, 124.3, 527.7, 211.6, 972.9,
                                            236.5, 40.0,   430.3, 80.2,  60.0};

}  // namespace

int main() {
    std::vector<std::string> invariant_failures;
    std::size_t reports_checked = 0;
    auto check_eval = [&](const EvalReport& r) {
        ++reports_checked;
        if (!r.invariants_hold()) invariant_failures.push_back(r.experiment);
    };

    // 1 -------------------------------------------------------------------
    criterion(1, [] {
        SupplyConfig cfg;
        cfg.samples_per_period = 400;
        double worst = 0.0;
        for (double a : DimmingSchedule::default_ratios()) {
            const CutoffRatio cut{a};
            std::vector<double> v(static_cast<std::size_t>(cfg.samples_per_period));
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = open_circuit_voltage(k, cut, cfg);
            const double want = phase_cut_rms(cfg.peak_voltage(), cut);
            worst = std::max(worst, std::abs(rms(v) - want) / want);
        }
        return std::pair{worst < 1e-3, "max relative RMS error over 14 ratios " + std::to_string(worst)};
    });

    // 2 -------------------------------------------------------------------
    criterion(2, [] {
        const DimmingSchedule sched;
        ClassTable t = default_class_table();
        SupplyConfig stiff;
        stiff.source_resistance = 0.0;
        for (std::size_t k = 0; k < kNumClasses; ++k)
            t[k] = {ModelFamily::resistive, {ParamSet{{"power_w", kResistorWatts[k]}}}, {{}, 0.0}};
        double linear = 0.0;
        for (auto [a, b] : {std::pair{LoadClass::USB, LoadClass::fan}, std::pair{LoadClass::hairdryer, LoadClass::monitor},
                            std::pair{LoadClass::batterycharger4A, LoadClass::INCANDESCENTS}}) {
            Grid pair;
            const Grid sum = solo_plus_solo(t, a, b, stiff, sched, pair);
            linear = std::max(linear, max_rel(pair, sum));
        }

        // Laptop supply (rectifier-capacitor) next to a heater, 0.5 ohm source.
        const ClassTable defaults = default_class_table();
        SupplyConfig soft;
        soft.source_resistance = 0.5;
        Grid pair;
        const Grid sum = solo_plus_solo(defaults, LoadClass::laptop, LoadClass::hairdryer, soft, sched, pair);
        double peak = 0.0, dev = 0.0;
        for (double v : sum.cells) peak = std::max(peak, std::abs(v));
        for (std::size_t k = 0; k < kCells; ++k)
            if (std::abs(sum.cells[k]) >= 0.05 * peak)
                dev = std::max(dev, std::abs(pair.cells[k] - sum.cells[k]) / std::abs(sum.cells[k]));
        const bool ok = linear < 1e-6 && dev > 0.01;
        return std::pair{ok, "resistive pairs max rel " + std::to_string(linear) + ", rectifier pair max deviation " +
                                 fmt(100.0 * dev) + "%"};
    });

    // 3 -------------------------------------------------------------------
    criterion(3, [] {
        NetConfig c;
        c.conv1 = {3, 3, 3};
        c.conv2 = {4, 3, 3};
        c.fc1_width = 16;
        c.fc2_width = 8;
        c.init_seed = 11;
        const auto p = init(c);
        Rng rng(5);
        Matrix x(static_cast<Eigen::Index>(kFeatureSize), 1);
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = rng.uniform(0.0, 1.0);
        const Matrix target = target_column(LabelSet{LoadClass::fan, LoadClass::ledbulb, LoadClass::USB}, c);
        const auto good = grad_check(p, x, target, 400, 17);
        const auto bad = grad_check(p, x, target, parameter_count(c), 17, GradientFault::flip_fc2);
        const bool ok = good.checked >= 200 && good.max_relative_error < 1e-4 && bad.max_relative_error > 1e-1;
        return std::pair{ok, std::to_string(good.checked) + " params max rel " + std::to_string(good.max_relative_error) +
                                 ", sign flip " + std::to_string(bad.max_relative_error)};
    });

    // 5 -------------------------------------------------------------------
    criterion(5, [&] {
        SimulationContext ctx;
        for (std::size_t k = 0; k < kNumClasses; ++k)
            ctx.classes[k] = {ModelFamily::resistive, {ParamSet{{"power_w", kResistorWatts[k]}}}, {{}, 0.0}};
        DatasetSpec spec;
        spec.singles_per_class = 2;
        spec.samples_per_two_load = 2;
        spec.samples_per_three_load = 2;
        const Dataset ds = generate(spec, ctx);

        ExperimentSettings s;
        s.net.normalization = Normalization::none;
        s.net.learning_rate = 3e-3;
        s.net.final_learning_rate = 1e-4;
        s.net.epochs = 5000;
        s.net.batch_size = 8;
        const double top = *std::max_element(kResistorWatts.begin(), kResistorWatts.end());
        s.scale = {top, top};
        s.runs = 2;
        s.seed = 42;
        const EvalReport r = experiment_e1(ds, s, SplitPlan::uniform(1, 1));
        check_eval(r);
        const bool ok = std::any_of(r.run_avg_strict.begin(), r.run_avg_strict.end(), [](double v) { return v == 1.0; });
        std::string d = std::to_string(ds.groups().size()) + " combos, per-run strict";
        for (double v : r.run_avg_strict) d += " " + fmt(v);
        return std::pair{ok, d};
    });

    // 6, 7, 8 share a reduced default dataset -----------------------------
    const ToolkitConfig defaults;
    DatasetSpec reduced = defaults.dataset;
    reduced.singles_per_class = 60;
    reduced.samples_per_two_load = 60;
    reduced.samples_per_three_load = 60;
    std::cerr << "generating reduced dataset (60 per combination)" << std::endl;
    const Dataset ds = generate(reduced, defaults.context(), default_jobs());

    ExperimentSettings s;
    s.net = defaults.net;
    s.scale = defaults.scale();
    s.seed = defaults.master_seed;
    s.runs = 10;
    s.jobs = default_jobs();

    double e1_strict = -1.0;
    criterion(6, [&] {
        const EvalReport r = experiment_e1(ds, s, SplitPlan::uniform(42, 18));
        check_eval(r);
        e1_strict = r.aggregate.avg_strict;
        const auto& a = r.aggregate;
        const bool ok = a.avg_strict >= 0.90 && a.avg_class_detection >= a.avg_strict;
        return std::pair{ok, "avg strict " + fmt(a.avg_strict) + ", avg class detection " + fmt(a.avg_class_detection) +
                                 ", worst strict " + fmt(a.worst_strict)};
    });

    criterion(7, [&] {
        const MotReport r = experiment_e_mot(ds, s, 42, 18);
        const bool sane = r.avg_single >= 0.0 && r.avg_single <= 1.0 && r.avg_multi >= 0.0 && r.avg_multi <= 1.0;
        const bool ok = sane && r.avg_multi <= r.avg_single - 0.25;
        return std::pair{ok, "single-load accuracy " + fmt(r.avg_single) + ", multi-load membership " + fmt(r.avg_multi)};
    });

    criterion(8, [&] {
        const EvalReport r = experiment_e2(ds, s, e2_plan(42, 10));
        check_eval(r);
        const double v = r.aggregate.avg_strict;
        const bool ok = e1_strict >= 0.0 && v < e1_strict && v >= 0.75;
        return std::pair{ok, "avg strict " + fmt(v) + " vs e1 " + fmt(e1_strict)};
    });

    // 4 -------------------------------------------------------------------
    criterion(4, [&] {
        ExperimentSettings e3 = s;
        e3.runs = 1;
        const OmissionReport o = experiment_e3_omit(ds, e3, 42, {"fan+laptop", "INCANDESCENTS+fan+ledbulb"});
        ++reports_checked;
        if (!o.invariants_hold()) invariant_failures.push_back("e3");
        std::string d = std::to_string(reports_checked) + " reports checked";
        d += ", e3 chain " + fmt(o.avg_at_least_one) + " >= " + fmt(o.avg_all_n) + " >= " + fmt(o.avg_all_n_plus_count);
        for (const auto& f : invariant_failures) d += ", violated in " + f;
        return std::pair{invariant_failures.empty() && reports_checked >= 4, d};
    });

    // 9 -------------------------------------------------------------------
    criterion(9, [] {
        const fs::path dir = fs::temp_directory_path() / "plugsense_acceptance";
        fs::remove_all(dir);
        fs::create_directories(dir);
        const fs::path cfg = dir / "cfg.json";
        std::ofstream(cfg) << R"({
  "master_seed": 7,
  "dataset": {"singles_per_class": 4, "two_load_combos": [["fan", "laptop"], ["USB", "monitor"]],
              "samples_per_two_load": 4, "three_load_combos": [["fan", "ledbulb", "INCANDESCENTS"]],
              "samples_per_three_load": 4},
  "net": {"conv1": {"out_channels": 3}, "conv2": {"out_channels": 4}, "fc1_width": 16, "fc2_width": 8, "epochs": 3},
  "experiments": {"runs": 2, "e1": {"train_per_combo": 3, "test_per_combo": 1}}
})";
        const std::string c = cfg.string();
        const fs::path a = dir / "a.jsonl", b = dir / "b.jsonl";
        if (run_cli({"gen", "--config", c, "--out", a.string(), "--jobs", "1"}) != 0 ||
            run_cli({"gen", "--config", c, "--out", b.string(), "--jobs", "1"}) != 0)
            return std::pair{false, std::string("gen failed")};
        const bool same_bytes = read_all(a) == read_all(b) && !read_all(a).empty();
        const fs::path r1 = dir / "j1", r2 = dir / "j2";
        if (run_cli({"exp", "e1", "--config", c, "--dataset", a.string(), "--out", r1.string(), "--jobs", "1"}) != 0 ||
            run_cli({"exp", "e1", "--config", c, "--dataset", a.string(), "--out", r2.string(), "--jobs", "2"}) != 0)
            return std::pair{false, std::string("exp failed")};
        const bool same_summary = read_all(r1 / "summary.json") == read_all(r2 / "summary.json");
        const bool same_report = read_all(r1 / "report.csv") == read_all(r2 / "report.csv");
        fs::remove_all(dir);
        return std::pair{same_bytes && same_summary && same_report,
                         std::string("dataset bytes ") + (same_bytes ? "identical" : "differ") + ", e1 summary --jobs 1 vs 2 " +
                             (same_summary && same_report ? "identical" : "differ")};
    });

    // 10 ------------------------------------------------------------------
    criterion(10, [] {
        auto expect = [](const LabelSet& ls, const std::vector<std::size_t>& present, double weight,
                         std::size_t count_slot) {
            const TargetVector t = encode_target(ls);
            if (t.class_part.size() != kNumClasses || t.count_part.size() != kCountOutputs) return false;
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                const bool in = std::find(present.begin(), present.end(), k) != present.end();
                if (t.class_part[k] != (in ? weight : 0.0)) return false;
            }
            for (std::size_t k = 0; k < kCountOutputs; ++k)
                if (t.count_part[k] != (k == count_slot ? 1.0 : 0.0)) return false;
            return true;
        };
        const bool one = expect(LabelSet{class_from_index(4)}, {4}, 1.0, 0);
        const bool two = expect(LabelSet{class_from_index(0), class_from_index(5)}, {0, 5}, 0.5, 1);
        const bool three =
            expect(LabelSet{class_from_index(0), class_from_index(3), class_from_index(5)}, {0, 3, 5}, 1.0 / 3.0, 2);
        return std::pair{one && two && three, std::string("single ") + (one ? "ok" : "wrong") + ", pair " +
                                                  (two ? "ok" : "wrong") + ", triple " + (three ? "ok" : "wrong")};
    });

    int failures = 0;
    for (const auto& [id, r] : results) {
        std::cout << (r.first ? "PASS" : "FAIL") << " criterion " << id << ": " << r.second << '\n';
        failures += r.first ? 0 : 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
