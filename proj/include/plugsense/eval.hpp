#pragma once

// Accuracy metrics and the four experiment protocols.
//
//   E1    70/30 split of every combination, fresh network per run
//   E2    160 singles and 10 samples of every multi-load combination for
//         training, the rest for testing
//   E3    one multi-load combination left out of training at a time and
//         evaluated on its own samples
//   E-MOT single-label network trained on singles, tested on singles and on
//         every multi-load sample (top-1 prediction in the truth set)

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plugsense/dataset.hpp"
#include "plugsense/error.hpp"
#include "plugsense/net.hpp"
#include "plugsense/parallel.hpp"

namespace plugsense {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

namespace detail {

inline void check_lengths(std::size_t preds, std::size_t truths) {
    if (preds != truths)
        throw LengthMismatch("metrics: " + std::to_string(preds) + " predictions vs " + std::to_string(truths) +
                             " truths");
}

}  // namespace detail

/// Top-|truth| classes equal the truth set (the true count is given).
inline bool class_detection_hit(const Prediction& p, const LabelSet& truth) {
    return top_n(p.class_probs, truth.size()) == truth.indices();
}

inline bool count_hit(const Prediction& p, const LabelSet& truth) { return p.n_hat == truth.size(); }

/// Predicted count right and the predicted set equal to the truth.
inline bool strict_hit(const Prediction& p, const LabelSet& truth) {
    return count_hit(p, truth) && p.top_set == truth.indices();
}

namespace detail {

template <typename Hit>
double fraction(std::span<const Prediction> preds, std::span<const LabelSet> truths, Hit hit) {
    check_lengths(preds.size(), truths.size());
    if (preds.empty()) return 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) ok += hit(preds[i], truths[i]) ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(preds.size());
}

}  // namespace detail

inline double class_detection_accuracy(std::span<const Prediction> preds, std::span<const LabelSet> truths) {
    return detail::fraction(preds, truths, class_detection_hit);
}

inline double count_accuracy(std::span<const Prediction> preds, std::span<const LabelSet> truths) {
    return detail::fraction(preds, truths, count_hit);
}

inline double strict_accuracy(std::span<const Prediction> preds, std::span<const LabelSet> truths) {
    return detail::fraction(preds, truths, strict_hit);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ComboAccuracy {
    double class_detection = 0.0;
    double count = 0.0;
    double strict = 0.0;
    std::size_t samples = 0;  // test samples over all runs
};

struct Aggregate {
    double avg_class_detection = 0.0;
    double worst_class_detection = 0.0;
    double avg_count = 0.0;
    double avg_strict = 0.0;
    double worst_strict = 0.0;
};

struct EvalReport {
    std::string experiment;
    std::map<std::string, ComboAccuracy> per_combo;
    Aggregate aggregate;
    std::size_t runs = 0;
    std::vector<double> run_avg_strict;  // per run, in run order

    /// Per combo and in aggregate: strict <= class detection and strict <= count.
    [[nodiscard]] bool invariants_hold() const {
        auto ok = [](double strict, double cd, double cnt) {
            return strict >= 0.0 && strict <= 1.0 && cd >= 0.0 && cd <= 1.0 && cnt >= 0.0 && cnt <= 1.0 &&
                   strict <= cd + 1e-12 && strict <= cnt + 1e-12;
        };
        for (const auto& [id, c] : per_combo)
            if (!ok(c.strict, c.class_detection, c.count)) return false;
        return ok(aggregate.avg_strict, aggregate.avg_class_detection, aggregate.avg_count) &&
               aggregate.worst_strict <= aggregate.worst_class_detection + 1e-12;
    }
};

/// Hit counters for one combination.
struct Tally {
    std::size_t samples = 0, class_detection = 0, count = 0, strict = 0;

    void add(const Prediction& p, const LabelSet& truth) {
        ++samples;
        class_detection += class_detection_hit(p, truth) ? 1 : 0;
        count += count_hit(p, truth) ? 1 : 0;
        strict += strict_hit(p, truth) ? 1 : 0;
    }
    Tally& operator+=(const Tally& o) {
        samples += o.samples;
        class_detection += o.class_detection;
        count += o.count;
        strict += o.strict;
        return *this;
    }
};

using TallyMap = std::map<std::string, Tally>;

inline TallyMap tally(std::span<const Prediction> preds, std::span<const LabelSet> truths) {
    detail::check_lengths(preds.size(), truths.size());
    TallyMap m;
    for (std::size_t i = 0; i < preds.size(); ++i) m[truths[i].combo_id()].add(preds[i], truths[i]);
    return m;
}

/// Averages across combinations (each combination weighs the same, as in the
/// accuracy grids); worst is the lowest combination.
inline Aggregate aggregate(const std::map<std::string, ComboAccuracy>& per_combo) {
    Aggregate a;
    if (per_combo.empty()) return a;
    a.worst_class_detection = a.worst_strict = 1.0;
    for (const auto& [id, c] : per_combo) {
        a.avg_class_detection += c.class_detection;
        a.avg_count += c.count;
        a.avg_strict += c.strict;
        a.worst_class_detection = std::min(a.worst_class_detection, c.class_detection);
        a.worst_strict = std::min(a.worst_strict, c.strict);
    }
    const auto n = static_cast<double>(per_combo.size());
    a.avg_class_detection /= n;
    a.avg_count /= n;
    a.avg_strict /= n;
    return a;
}

/// Builds a report from per-run tallies (reduced in run order). With equal test
/// counts per run the pooled fractions equal the mean of per-run fractions.
inline EvalReport make_report(std::string name, const std::vector<TallyMap>& runs) {
    EvalReport r;
    r.experiment = std::move(name);
    r.runs = runs.size();
    TallyMap pooled;
    for (const auto& run : runs) {
        double s = 0.0;
        for (const auto& [id, t] : run) {
            pooled[id] += t;
            s += t.samples ? static_cast<double>(t.strict) / static_cast<double>(t.samples) : 0.0;
        }
        r.run_avg_strict.push_back(run.empty() ? 0.0 : s / static_cast<double>(run.size()));
    }
    for (const auto& [id, t] : pooled) {
        const auto n = static_cast<double>(t.samples);
        r.per_combo[id] = {static_cast<double>(t.class_detection) / n, static_cast<double>(t.count) / n,
                           static_cast<double>(t.strict) / n, t.samples};
    }
    r.aggregate = aggregate(r.per_combo);
    return r;
}

// ---------------------------------------------------------------------------
// Experiment settings
// ---------------------------------------------------------------------------

struct ExperimentSettings {
    NetConfig net;
    FeatureScale scale;
    std::size_t runs = 10;
    std::uint64_t seed = 42;
    unsigned jobs = 1;
};

/// Per-run seeds: one for the split, one for network init and shuffling.
inline std::uint64_t split_seed(std::uint64_t seed, std::string_view experiment, std::size_t run) {
    return derive_seed(seed, std::string(experiment) + "/split", run);
}

inline std::uint64_t net_seed(std::uint64_t seed, std::string_view experiment, std::size_t run) {
    return derive_seed(seed, std::string(experiment) + "/net", run);
}

namespace detail {

/// Column selection from a precomputed feature matrix.
inline ExampleSet select(const Matrix& inputs, const Dataset& ds, std::span<const std::size_t> idx,
                         const NetConfig& cfg, bool with_targets = true) {
    ExampleSet ex;
    ex.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(idx.size()));
    if (with_targets) ex.targets.resize(static_cast<Eigen::Index>(NetShape(cfg).outputs), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        ex.inputs.col(col) = inputs.col(static_cast<Eigen::Index>(idx[j]));
        const LabelSet& labels = ds.samples[idx[j]].labels;
        if (with_targets) ex.targets.col(col) = target_column(labels, cfg);
        ex.labels.push_back(labels);
    }
    return ex;
}

inline Matrix all_features(const Dataset& ds, FeatureScale scale) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return feature_matrix(ds, idx, scale);
}

inline NetParams fit(const ExampleSet& train_set, NetConfig cfg, std::uint64_t seed) {
    cfg.init_seed = seed;
    return train(init(cfg), train_set, cfg).params;
}

/// Train/evaluate loop shared by E1 and E2.
inline EvalReport split_experiment(const std::string& name, const Dataset& ds, const SplitPlan& plan,
                                   const ExperimentSettings& s) {
    if (s.runs == 0) throw InvalidArgument(name + ": runs must be > 0");
    const Matrix inputs = all_features(ds, s.scale);
    // Validate the split once up front so InsufficientSamples surfaces
    // before any training.
    const auto probe = split_indices(ds, plan, split_seed(s.seed, name, 0));
    if (probe.test.empty()) throw InsufficientSamples(name + " test split", 0, 1);
    std::vector<TallyMap> runs(s.runs);
    parallel_for(s.runs, s.jobs, [&](std::size_t r) {
        const auto idx = split_indices(ds, plan, split_seed(s.seed, name, r));
        const ExampleSet tr = select(inputs, ds, idx.train, s.net);
        const ExampleSet te = select(inputs, ds, idx.test, s.net, false);
        const NetParams p = fit(tr, s.net, net_seed(s.seed, name, r));
        runs[r] = tally(predict(p, te.inputs), te.labels);
    });
    return make_report(name, runs);
}

}  // namespace detail

/// E1: `plan` defaults to 70 train / 30 test per combination.
inline EvalReport experiment_e1(const Dataset& ds, const ExperimentSettings& s,
                                const SplitPlan& plan = SplitPlan::uniform(70, 30)) {
    return detail::split_experiment("e1", ds, plan, s);
}

/// E2: 160 singles and 10 per multi-load combination for training; all the
/// remaining samples (90 per combination on the default dataset) are tested.
inline SplitPlan e2_plan(std::size_t singles_train = 160, std::size_t multis_train = 10) {
    return {{singles_train, std::nullopt}, {multis_train, std::nullopt}};
}

inline EvalReport experiment_e2(const Dataset& ds, const ExperimentSettings& s, const SplitPlan& plan = e2_plan()) {
    return detail::split_experiment("e2", ds, plan, s);
}

// ---------------------------------------------------------------------------
// E3: omitted combination
// ---------------------------------------------------------------------------

struct OmissionRow {
    std::size_t samples = 0;                        // over all runs
    std::map<std::string, double> top_predictions;  // predicted set (n_hat classes) -> fraction
    std::array<double, kCountOutputs> count_predictions{};  // n_hat = 1, 2, 3
    double at_least_one_correct = 0.0;  // top-N (true N) shares a class with the truth
    double all_n_correct = 0.0;         // top-N equals the truth
    double all_n_plus_count_correct = 0.0;  // strict hit
};

struct OmissionReport {
    std::map<std::string, OmissionRow> per_combo;
    double avg_at_least_one = 0.0;
    double avg_all_n = 0.0;
    double avg_all_n_plus_count = 0.0;
    std::size_t runs_per_combo = 0;

    [[nodiscard]] bool invariants_hold() const {
        auto chain = [](double a, double b, double c) { return a + 1e-12 >= b && b + 1e-12 >= c && c >= 0.0 && a <= 1.0; };
        for (const auto& [id, r] : per_combo)
            if (!chain(r.at_least_one_correct, r.all_n_correct, r.all_n_plus_count_correct)) return false;
        return chain(avg_at_least_one, avg_all_n, avg_all_n_plus_count);
    }
};

inline std::string set_id(std::span<const std::size_t> classes) {
    std::vector<LoadClass> v;
    for (auto c : classes) v.push_back(class_from_index(c));
    return LabelSet(std::move(v)).combo_id();
}

/// Leaves out each multi-load combination in turn (all of them unless `only`
/// lists some). Training uses `train_per_combo` samples of every remaining
/// combination.
inline OmissionReport experiment_e3_omit(const Dataset& ds, const ExperimentSettings& s,
                                         std::size_t train_per_combo = 70,
                                         const std::vector<std::string>& only = {}) {
    if (s.runs == 0) throw InvalidArgument("e3: runs must be > 0");
    const auto groups = ds.groups();
    std::vector<std::string> targets;
    for (const auto& [id, members] : groups)
        if (id.find('+') != std::string::npos && (only.empty() || std::find(only.begin(), only.end(), id) != only.end()))
            targets.push_back(id);
    if (targets.empty()) throw InsufficientSamples("e3: no multi-load combination", 0, 1);
    for (const auto& id : only)
        if (std::find(targets.begin(), targets.end(), id) == targets.end())
            throw InvalidArgument("e3: combination '" + id + "' is not a multi-load combination of the dataset");

    const Matrix inputs = detail::all_features(ds, s.scale);
    const SplitPlan plan{{train_per_combo, 0}, {train_per_combo, 0}};
    struct Job {
        std::size_t target, run;
    };
    std::vector<Job> jobs;
    for (std::size_t t = 0; t < targets.size(); ++t)
        for (std::size_t r = 0; r < s.runs; ++r) jobs.push_back({t, r});

    struct Outcome {
        std::vector<Prediction> preds;
        std::vector<LabelSet> truths;
    };
    std::vector<Outcome> outcomes(jobs.size());
    parallel_for(jobs.size(), s.jobs, [&](std::size_t j) {
        const std::string& omitted = targets[jobs[j].target];
        std::vector<std::size_t> keep, held;
        for (std::size_t i = 0; i < ds.size(); ++i)
            (ds.samples[i].combo_id == omitted ? held : keep).push_back(i);
        const Dataset rest = ds.subset(keep);
        const std::string tag = "e3/" + omitted;
        const auto idx = split_indices(rest, plan, split_seed(s.seed, tag, jobs[j].run));
        std::vector<std::size_t> train_idx;
        for (auto i : idx.train) train_idx.push_back(keep[i]);
        const ExampleSet tr = detail::select(inputs, ds, train_idx, s.net);
        const ExampleSet te = detail::select(inputs, ds, held, s.net, false);
        const NetParams p = detail::fit(tr, s.net, net_seed(s.seed, tag, jobs[j].run));
        outcomes[j] = {predict(p, te.inputs), te.labels};
    });

    OmissionReport rep;
    rep.runs_per_combo = s.runs;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        OmissionRow row;
        std::size_t one = 0, all = 0, strict = 0;
        std::map<std::string, std::size_t> sets;
        std::array<std::size_t, kCountOutputs> counts{};
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            if (jobs[j].target != t) continue;
            const auto& o = outcomes[j];
            for (std::size_t i = 0; i < o.preds.size(); ++i) {
                const auto truth = o.truths[i].indices();
                const auto top = top_n(o.preds[i].class_probs, truth.size());
                const bool any = std::any_of(top.begin(), top.end(),
                                             [&](std::size_t c) { return std::find(truth.begin(), truth.end(), c) != truth.end(); });
                one += any ? 1 : 0;
                all += top == truth ? 1 : 0;
                strict += strict_hit(o.preds[i], o.truths[i]) ? 1 : 0;
                ++sets[set_id(o.preds[i].top_set)];
                ++counts[o.preds[i].n_hat - 1];
                ++row.samples;
            }
        }
        const auto n = static_cast<double>(row.samples);
        row.at_least_one_correct = static_cast<double>(one) / n;
        row.all_n_correct = static_cast<double>(all) / n;
        row.all_n_plus_count_correct = static_cast<double>(strict) / n;
        for (const auto& [id, c] : sets) row.top_predictions[id] = static_cast<double>(c) / n;
        for (std::size_t k = 0; k < kCountOutputs; ++k) row.count_predictions[k] = static_cast<double>(counts[k]) / n;
        rep.avg_at_least_one += row.at_least_one_correct;
        rep.avg_all_n += row.all_n_correct;
        rep.avg_all_n_plus_count += row.all_n_plus_count_correct;
        rep.per_combo[targets[t]] = std::move(row);
    }
    const auto k = static_cast<double>(targets.size());
    rep.avg_at_least_one /= k;
    rep.avg_all_n /= k;
    rep.avg_all_n_plus_count /= k;
    return rep;
}

// ---------------------------------------------------------------------------
// E-MOT: single-label model on multi-load samples
// ---------------------------------------------------------------------------

struct MotReport {
    std::map<std::string, double> per_combo;  // singles: top-1 accuracy; multis: top-1 in truth
    std::map<std::string, std::size_t> samples;
    double avg_single = 0.0;
    double avg_multi = 0.0;
    double worst_multi = 0.0;
    std::size_t runs = 0;
};

/// Top-1 of a single-label model is correct on a multi-load sample when it
/// names any member.
inline bool membership_hit(const Prediction& p, const LabelSet& truth) {
    const auto top = top_n(p.class_probs, 1).front();
    return truth.contains(class_from_index(top));
}

/// Trains the single-label variant (no count head) on `singles_train` samples
/// per class, tests on `singles_test` held-out singles and on every
/// multi-load sample. Only the singles split changes between runs.
inline MotReport experiment_e_mot(const Dataset& ds, const ExperimentSettings& s, std::size_t singles_train = 220,
                                  std::size_t singles_test = 30) {
    if (s.runs == 0) throw InvalidArgument("mot: runs must be > 0");
    NetConfig cfg = s.net;
    cfg.count_outputs = 0;
    std::vector<std::size_t> single_idx, multi_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.samples[i].labels.size() == 1 ? single_idx : multi_idx).push_back(i);
    const Dataset singles = ds.subset(single_idx);
    if (singles.empty()) throw InsufficientSamples("mot: singles", 0, singles_train + singles_test);
    const SplitPlan plan{{singles_train, singles_test}, {0, 0}};
    split_indices(singles, plan, split_seed(s.seed, "mot", 0));  // surfaces InsufficientSamples early

    const Matrix inputs = detail::all_features(ds, s.scale);
    const ExampleSet multis = detail::select(inputs, ds, multi_idx, cfg, false);
    std::vector<std::map<std::string, std::pair<std::size_t, std::size_t>>> runs(s.runs);
    parallel_for(s.runs, s.jobs, [&](std::size_t r) {
        const auto idx = split_indices(singles, plan, split_seed(s.seed, "mot", r));
        std::vector<std::size_t> tr_idx, te_idx;
        for (auto i : idx.train) tr_idx.push_back(single_idx[i]);
        for (auto i : idx.test) te_idx.push_back(single_idx[i]);
        const ExampleSet tr = detail::select(inputs, ds, tr_idx, cfg);
        const ExampleSet te = detail::select(inputs, ds, te_idx, cfg, false);
        const NetParams p = detail::fit(tr, cfg, net_seed(s.seed, "mot", r));
        auto& m = runs[r];
        const auto ps = predict(p, te.inputs);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            auto& e = m[te.labels[i].combo_id()];
            ++e.second;
            e.first += membership_hit(ps[i], te.labels[i]) ? 1 : 0;
        }
        const auto pm = predict(p, multis.inputs);
        for (std::size_t i = 0; i < pm.size(); ++i) {
            auto& e = m[multis.labels[i].combo_id()];
            ++e.second;
            e.first += membership_hit(pm[i], multis.labels[i]) ? 1 : 0;
        }
    });

    MotReport rep;
    rep.runs = s.runs;
    std::map<std::string, std::pair<std::size_t, std::size_t>> pooled;
    for (const auto& m : runs)
        for (const auto& [id, e] : m) {
            pooled[id].first += e.first;
            pooled[id].second += e.second;
        }
    std::size_t n_single = 0, n_multi = 0;
    rep.worst_multi = 1.0;
    for (const auto& [id, e] : pooled) {
        const double acc = static_cast<double>(e.first) / static_cast<double>(e.second);
        rep.per_combo[id] = acc;
        rep.samples[id] = e.second;
        if (id.find('+') == std::string::npos) {
            rep.avg_single += acc;
            ++n_single;
        } else {
            rep.avg_multi += acc;
            rep.worst_multi = std::min(rep.worst_multi, acc);
            ++n_multi;
        }
    }
    if (n_single) rep.avg_single /= static_cast<double>(n_single);
    if (n_multi) rep.avg_multi /= static_cast<double>(n_multi);
    else rep.worst_multi = 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

enum class ExportFormat { csv, grid };

namespace detail {

inline std::string fixed6(double v) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(6) << v;
    return o.str();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// 11x11 grid: row i, column j >= i holds the value for {i, j} (the diagonal
/// holds singles); unmeasured and lower-triangle cells stay blank. Three-load
/// combinations follow as "combo_id,value" lines.
inline std::string render_grid(const std::map<std::string, double>& values) {
    std::ostringstream o;
    o << "class";
    for (auto c : all_classes()) o << ',' << label(c);
    o << '\n';
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        o << label(class_from_index(i));
        for (std::size_t j = 0; j < kNumClasses; ++j) {
            o << ',';
            if (j < i) continue;
            const std::string id = i == j ? LabelSet{class_from_index(i)}.combo_id()
                                          : LabelSet{class_from_index(i), class_from_index(j)}.combo_id();
            if (auto it = values.find(id); it != values.end()) o << fixed6(it->second);
        }
        o << '\n';
    }
    for (const auto& [id, v] : values)
        if (std::count(id.begin(), id.end(), '+') >= 2) o << id << ',' << fixed6(v) << '\n';
    return o.str();
}

}  // namespace detail

inline std::string report_csv(const EvalReport& r) {
    std::ostringstream o;
    o << "combo_id,class_detection_acc,count_acc,strict_acc,samples\n";
    if (r.per_combo.empty()) return o.str();
    using detail::fixed6;
    for (const auto& [id, c] : r.per_combo)
        o << id << ',' << fixed6(c.class_detection) << ',' << fixed6(c.count) << ',' << fixed6(c.strict) << ','
          << c.samples << '\n';
    const auto& a = r.aggregate;
    o << "average," << fixed6(a.avg_class_detection) << ',' << fixed6(a.avg_count) << ',' << fixed6(a.avg_strict)
      << ",\n";
    o << "worst," << fixed6(a.worst_class_detection) << ",," << fixed6(a.worst_strict) << ",\n";
    return o.str();
}

/// Grid of one metric: "strict" (default) or "class_detection".
inline std::string report_grid(const EvalReport& r, std::string_view metric = "strict") {
    std::map<std::string, double> v;
    for (const auto& [id, c] : r.per_combo) v[id] = metric == "class_detection" ? c.class_detection : c.strict;
    return detail::render_grid(v);
}

inline void export_report(const EvalReport& r, const std::filesystem::path& path, ExportFormat fmt,
                          std::string_view metric = "strict") {
    auto out = detail::open_out(path);
    out << (fmt == ExportFormat::csv ? report_csv(r) : report_grid(r, metric));
    detail::finish(out, path);
}

inline std::string report_csv(const OmissionReport& r) {
    std::ostringstream o;
    o << "combo_id,at_least_one_correct,all_n_correct,all_n_plus_count_correct,count_1,count_2,count_3,"
         "most_predicted,most_predicted_share,samples\n";
    if (r.per_combo.empty()) return o.str();
    using detail::fixed6;
    for (const auto& [id, row] : r.per_combo) {
        auto best = std::max_element(row.top_predictions.begin(), row.top_predictions.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
        o << id << ',' << fixed6(row.at_least_one_correct) << ',' << fixed6(row.all_n_correct) << ','
          << fixed6(row.all_n_plus_count_correct);
        for (double c : row.count_predictions) o << ',' << fixed6(c);
        o << ',' << best->first << ',' << fixed6(best->second) << ',' << row.samples << '\n';
    }
    o << "average," << fixed6(r.avg_at_least_one) << ',' << fixed6(r.avg_all_n) << ','
      << fixed6(r.avg_all_n_plus_count) << ",,,,,,\n";
    return o.str();
}

inline std::string report_grid(const OmissionReport& r) {
    std::map<std::string, double> v;
    for (const auto& [id, row] : r.per_combo) v[id] = row.at_least_one_correct;
    return detail::render_grid(v);
}

inline void export_report(const OmissionReport& r, const std::filesystem::path& path, ExportFormat fmt) {
    auto out = detail::open_out(path);
    out << (fmt == ExportFormat::csv ? report_csv(r) : report_grid(r));
    detail::finish(out, path);
}

inline std::string report_csv(const MotReport& r) {
    std::ostringstream o;
    o << "combo_id,accuracy,samples\n";
    if (r.per_combo.empty()) return o.str();
    for (const auto& [id, acc] : r.per_combo) o << id << ',' << detail::fixed6(acc) << ',' << r.samples.at(id) << '\n';
    o << "average_single," << detail::fixed6(r.avg_single) << ",\n";
    o << "average_multi," << detail::fixed6(r.avg_multi) << ",\n";
    o << "worst_multi," << detail::fixed6(r.worst_multi) << ",\n";
    return o.str();
}

inline std::string report_grid(const MotReport& r) { return detail::render_grid(r.per_combo); }

inline void export_report(const MotReport& r, const std::filesystem::path& path, ExportFormat fmt) {
    auto out = detail::open_out(path);
    out << (fmt == ExportFormat::csv ? report_csv(r) : report_grid(r));
    detail::finish(out, path);
}

// Machine-readable summaries.

inline nlohmann::json summary(const EvalReport& r) {
    const auto& a = r.aggregate;
    return {{"experiment", r.experiment},
            {"runs", r.runs},
            {"combos", r.per_combo.size()},
            {"avg_class_detection", a.avg_class_detection},
            {"worst_class_detection", a.worst_class_detection},
            {"avg_count", a.avg_count},
            {"avg_strict", a.avg_strict},
            {"worst_strict", a.worst_strict},
            {"run_avg_strict", r.run_avg_strict}};
}

inline nlohmann::json summary(const OmissionReport& r) {
    return {{"experiment", "e3"},
            {"runs_per_combo", r.runs_per_combo},
            {"combos", r.per_combo.size()},
            {"avg_at_least_one_correct", r.avg_at_least_one},
            {"avg_all_n_correct", r.avg_all_n},
            {"avg_all_n_plus_count_correct", r.avg_all_n_plus_count}};
}

inline nlohmann::json summary(const MotReport& r) {
    return {{"experiment", "mot"},
            {"runs", r.runs},
            {"avg_single_accuracy", r.avg_single},
            {"avg_multi_accuracy", r.avg_multi},
            {"worst_multi_accuracy", r.worst_multi}};
}

}  // namespace plugsense
