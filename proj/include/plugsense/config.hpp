#pragma once

// Toolkit configuration: one JSON document, every section optional, unknown
// keys rejected. Missing values fall back to the built-in defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plugsense/dataset.hpp"
#include "plugsense/error.hpp"
#include "plugsense/eval.hpp"
#include "plugsense/loads.hpp"
#include "plugsense/net.hpp"
#include "plugsense/probe.hpp"
#include "plugsense/waveform.hpp"

namespace plugsense {

struct ExperimentDefaults {
    std::size_t runs = 10;
    std::size_t e1_train = 70;
    std::size_t e1_test = 30;
    std::size_t e2_singles_train = 160;
    std::size_t e2_multis_train = 10;
    std::size_t e3_train_per_combo = 70;
    std::size_t e3_runs_per_combo = 10;
    std::vector<std::string> e3_combos;  // empty: every multi-load combination
    std::size_t mot_singles_train = 220;
    std::size_t mot_singles_test = 30;
};

struct ToolkitConfig {
    std::uint64_t master_seed = 42;
    SupplyConfig supply;
    DimmingSchedule schedule;
    ClassTable classes = default_class_table();
    DatasetSpec dataset;
    std::optional<FeatureScale> feature_scale;  // unset: max nominal apparent power
    NetConfig net;
    ExperimentDefaults experiments;

    [[nodiscard]] SimulationContext context() const { return {supply, schedule, classes}; }

    [[nodiscard]] FeatureScale scale() const {
        if (feature_scale) return *feature_scale;
        const double s = max_nominal_apparent_power(classes, supply);
        return {s, s};
    }

    void validate() const {
        supply.validate();
        schedule.validate();
        dataset.validate();
        net.validate();
        if (net.count_outputs != kCountOutputs) throw ConfigError("net.count_outputs must be 3");
        if (net.num_classes != kNumClasses) throw ConfigError("net.num_classes must be 11");
        for (auto cls : all_classes()) {
            const ClassSpec& spec = classes[index_of(cls)];
            const std::string where = "loads." + std::string(label(cls));
            spec.jitter.validate(where);
            if (spec.variants.empty()) throw ConfigError(where + ": needs at least one variant");
            for (std::size_t v = 0; v < spec.variants.size(); ++v) {
                try {
                    (void)nominal_instance(cls, spec, v, supply);
                } catch (const Error& e) {
                    throw ConfigError(where + ".variants[" + std::to_string(v) + "]: " + e.what());
                }
            }
        }
        if (feature_scale && (!(feature_scale->real_power > 0.0) || !(feature_scale->apparent_power > 0.0)))
            throw ConfigError("features: scales must be > 0");
        if (experiments.runs == 0 || experiments.e3_runs_per_combo == 0)
            throw ConfigError("experiments: run counts must be > 0");
    }
};

namespace detail {

/// Walks one JSON object, recording which keys were consumed so leftovers can
/// be reported.
class ObjectReader {
public:
    ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }
    ~ObjectReader() = default;

    [[nodiscard]] std::string where(std::string_view key = {}) const {
        std::string p = path_.empty() ? std::string("config") : path_;
        if (!key.empty()) p += "." + std::string(key);
        return p;
    }

    const nlohmann::json* find(std::string_view key) {
        seen_.insert(std::string(key));
        auto it = j_.find(std::string(key));
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    void read(std::string_view key, T& out) {
        if (const auto* v = find(key)) out = convert<T>(*v, where(key));
    }

    ObjectReader child(std::string_view key) {
        const auto* v = find(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return ObjectReader(v ? *v : empty, path_.empty() ? std::string(key) : path_ + "." + std::string(key));
    }

    [[nodiscard]] bool has(std::string_view key) const { return j_.contains(std::string(key)); }

    /// Throws on the first key that was never asked for.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
    }

    template <typename T>
    static T convert(const nlohmann::json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
            if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned())
                throw ConfigError(where + " must be >= 0");
            return v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where + " must be a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where + " must be a string");
            return v.get<std::string>();
        } else {
            try {
                return v.get<T>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError(where + " has the wrong type");
            }
        }
    }

    [[nodiscard]] const nlohmann::json& json() const { return j_; }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline LoadClass class_named(const std::string& name, const std::string& where) {
    if (auto c = parse_class(name)) return *c;
    throw ConfigError(where + ": unknown load class '" + name + "'");
}

inline std::vector<LabelSet> read_combos(const nlohmann::json& j, const std::string& where, std::size_t size) {
    if (!j.is_array()) throw ConfigError(where + " must be an array of class-name lists");
    std::vector<LabelSet> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != size)
            throw ConfigError(w + " must list " + std::to_string(size) + " class names");
        std::vector<LoadClass> cls;
        for (const auto& n : j[i]) cls.push_back(class_named(ObjectReader::convert<std::string>(n, w), w));
        try {
            out.emplace_back(std::move(cls));
        } catch (const Error& e) {
            throw ConfigError(w + ": " + e.what());
        }
    }
    return out;
}

inline ClassSpec read_class(ObjectReader r, const ClassSpec& base) {
    ClassSpec spec = base;
    if (const auto* f = r.find("family")) {
        const auto name = ObjectReader::convert<std::string>(*f, r.where("family"));
        auto fam = parse_family(name);
        if (!fam) throw ConfigError(r.where("family") + ": unknown model family '" + name + "'");
        spec.family = *fam;
    }
    if (const auto* v = r.find("variants")) {
        if (!v->is_array() || v->empty()) throw ConfigError(r.where("variants") + " must be a non-empty array");
        spec.variants.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string w = r.where("variants") + "[" + std::to_string(i) + "]";
            if (!(*v)[i].is_object()) throw ConfigError(w + " must be an object of numbers");
            ParamSet ps;
            for (auto it = (*v)[i].begin(); it != (*v)[i].end(); ++it)
                ps[it.key()] = ObjectReader::convert<double>(it.value(), w + "." + it.key());
            spec.variants.push_back(std::move(ps));
        }
    }
    if (r.has("jitter")) {
        auto jr = r.child("jitter");
        if (const auto* s = jr.find("spreads")) {
            if (!s->is_object()) throw ConfigError(jr.where("spreads") + " must be an object");
            spec.jitter.spreads.clear();
            for (auto it = s->begin(); it != s->end(); ++it)
                spec.jitter.spreads[it.key()] = ObjectReader::convert<double>(it.value(), jr.where("spreads") + "." + it.key());
        }
        jr.read("drift", spec.jitter.drift);
        jr.finish();
    }
    r.finish();
    return spec;
}

inline std::size_t json_line_of(const std::string& text, std::size_t byte) {
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())), '\n'));
}

}  // namespace detail

/// Parses and validates a configuration document.
inline ToolkitConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON at line " + std::to_string(detail::json_line_of(text, e.byte)) + ": " +
                          e.what());
    }
    ToolkitConfig c;
    detail::ObjectReader root(j, "");
    root.read("master_seed", c.master_seed);

    {
        auto r = root.child("supply");
        r.read("mains_frequency", c.supply.mains_frequency);
        r.read("nominal_rms_voltage", c.supply.nominal_rms_voltage);
        r.read("samples_per_period", c.supply.samples_per_period);
        r.read("source_resistance", c.supply.source_resistance);
        if (const auto* e = r.find("edge_mode")) {
            const auto m = detail::ObjectReader::convert<std::string>(*e, r.where("edge_mode"));
            if (m == "leading") c.supply.edge_mode = EdgeMode::leading;
            else if (m == "trailing") c.supply.edge_mode = EdgeMode::trailing;
            else throw ConfigError(r.where("edge_mode") + " must be \"leading\" or \"trailing\"");
        }
        if (r.has("solver")) {
            auto s = r.child("solver");
            s.read("damping", c.supply.solver.damping);
            s.read("tolerance_a", c.supply.solver.tolerance_a);
            s.read("max_iterations", c.supply.solver.max_iterations);
            s.finish();
        }
        r.finish();
    }
    {
        auto r = root.child("schedule");
        r.read("ratios", c.schedule.ratios);
        r.read("periods_per_ratio", c.schedule.periods_per_ratio);
        r.read("settle_periods", c.schedule.settle_periods);
        r.finish();
    }
    {
        auto r = root.child("loads");
        for (auto it = r.json().begin(); it != r.json().end(); ++it) {
            const LoadClass cls = detail::class_named(it.key(), r.where(it.key()));
            c.classes[index_of(cls)] = detail::read_class(r.child(it.key()), c.classes[index_of(cls)]);
        }
        r.finish();
    }
    {
        auto r = root.child("dataset");
        r.read("singles_per_class", c.dataset.singles_per_class);
        r.read("samples_per_two_load", c.dataset.samples_per_two_load);
        r.read("samples_per_three_load", c.dataset.samples_per_three_load);
        r.read("drift_horizon_s", c.dataset.drift_horizon_s);
        if (const auto* t = r.find("two_load_combos")) {
            if (t->is_string() && t->get<std::string>() == "all") c.dataset.two_load_combos = all_two_load_combos();
            else c.dataset.two_load_combos = detail::read_combos(*t, r.where("two_load_combos"), 2);
        }
        if (const auto* t = r.find("three_load_combos"))
            c.dataset.three_load_combos = detail::read_combos(*t, r.where("three_load_combos"), 3);
        r.finish();
    }
    if (root.has("features")) {
        auto r = root.child("features");
        FeatureScale fs{0.0, 0.0};
        const bool both = r.has("real_power_scale") && r.has("apparent_power_scale");
        r.read("real_power_scale", fs.real_power);
        r.read("apparent_power_scale", fs.apparent_power);
        r.finish();
        if (!both) throw ConfigError("features needs both real_power_scale and apparent_power_scale");
        c.feature_scale = fs;
    }
    {
        auto r = root.child("net");
        auto conv = [&](std::string_view key, ConvSpec& spec) {
            if (!r.has(key)) return;
            auto cr = r.child(key);
            cr.read("out_channels", spec.channels);
            cr.read("kernel_h", spec.kernel_h);
            cr.read("kernel_w", spec.kernel_w);
            cr.finish();
        };
        conv("conv1", c.net.conv1);
        conv("conv2", c.net.conv2);
        r.read("fc1_width", c.net.fc1_width);
        r.read("fc2_width", c.net.fc2_width);
        r.read("num_classes", c.net.num_classes);
        r.read("count_outputs", c.net.count_outputs);
        r.read("leaky_slope", c.net.leaky_slope);
        if (const auto* n = r.find("normalization")) {
            const auto name = detail::ObjectReader::convert<std::string>(*n, r.where("normalization"));
            auto it = std::find(kNormalizationNames.begin(), kNormalizationNames.end(), name);
            if (it == kNormalizationNames.end()) throw ConfigError(r.where("normalization") + ": unknown mode '" + name + "'");
            c.net.normalization = static_cast<Normalization>(it - kNormalizationNames.begin());
        }
        if (const auto* o = r.find("optimizer")) {
            const auto name = detail::ObjectReader::convert<std::string>(*o, r.where("optimizer"));
            auto it = std::find(kOptimizerNames.begin(), kOptimizerNames.end(), name);
            if (it == kOptimizerNames.end()) throw ConfigError(r.where("optimizer") + ": unknown optimizer '" + name + "'");
            c.net.optimizer = static_cast<Optimizer>(it - kOptimizerNames.begin());
        }
        r.read("learning_rate", c.net.learning_rate);
        r.read("final_learning_rate", c.net.final_learning_rate);
        r.read("epochs", c.net.epochs);
        r.read("batch_size", c.net.batch_size);
        r.read("init_seed", c.net.init_seed);
        r.finish();
    }
    {
        auto r = root.child("experiments");
        auto& e = c.experiments;
        r.read("runs", e.runs);
        if (r.has("e1")) {
            auto s = r.child("e1");
            s.read("train_per_combo", e.e1_train);
            s.read("test_per_combo", e.e1_test);
            s.finish();
        }
        if (r.has("e2")) {
            auto s = r.child("e2");
            s.read("singles_train", e.e2_singles_train);
            s.read("multis_train", e.e2_multis_train);
            s.finish();
        }
        if (r.has("e3")) {
            auto s = r.child("e3");
            s.read("train_per_combo", e.e3_train_per_combo);
            s.read("runs_per_combo", e.e3_runs_per_combo);
            s.read("combos", e.e3_combos);
            s.finish();
        }
        if (r.has("mot")) {
            auto s = r.child("mot");
            s.read("singles_train", e.mot_singles_train);
            s.read("singles_test", e.mot_singles_test);
            s.finish();
        }
        r.finish();
    }
    root.finish();
    c.dataset.master_seed = c.master_seed;
    c.validate();
    return c;
}

inline ToolkitConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// The effective configuration as JSON (what a run directory manifest records).
inline nlohmann::json config_to_json(const ToolkitConfig& c) {
    nlohmann::json j;
    j["master_seed"] = c.master_seed;
    j["supply"] = {{"mains_frequency", c.supply.mains_frequency},
                   {"nominal_rms_voltage", c.supply.nominal_rms_voltage},
                   {"samples_per_period", c.supply.samples_per_period},
                   {"source_resistance", c.supply.source_resistance},
                   {"edge_mode", c.supply.edge_mode == EdgeMode::leading ? "leading" : "trailing"},
                   {"solver",
                    {{"damping", c.supply.solver.damping},
                     {"tolerance_a", c.supply.solver.tolerance_a},
                     {"max_iterations", c.supply.solver.max_iterations}}}};
    j["schedule"] = {{"ratios", c.schedule.ratios},
                     {"periods_per_ratio", c.schedule.periods_per_ratio},
                     {"settle_periods", c.schedule.settle_periods}};
    nlohmann::json loads = nlohmann::json::object();
    for (auto cls : all_classes()) {
        const ClassSpec& s = c.classes[index_of(cls)];
        nlohmann::json variants = nlohmann::json::array();
        for (const auto& v : s.variants) {
            nlohmann::json o = nlohmann::json::object();
            for (const auto& [k, x] : v) o[k] = x;
            variants.push_back(o);
        }
        nlohmann::json spreads = nlohmann::json::object();
        for (const auto& [k, x] : s.jitter.spreads) spreads[k] = x;
        loads[std::string(label(cls))] = {{"family", std::string(family_name(s.family))},
                                          {"variants", variants},
                                          {"jitter", {{"spreads", spreads}, {"drift", s.jitter.drift}}}};
    }
    j["loads"] = loads;
    auto combos = [](const std::vector<LabelSet>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& ls : v) {
            nlohmann::json names = nlohmann::json::array();
            for (auto cls : ls.classes()) names.push_back(std::string(label(cls)));
            a.push_back(names);
        }
        return a;
    };
    j["dataset"] = {{"singles_per_class", c.dataset.singles_per_class},
                    {"samples_per_two_load", c.dataset.samples_per_two_load},
                    {"samples_per_three_load", c.dataset.samples_per_three_load},
                    {"drift_horizon_s", c.dataset.drift_horizon_s},
                    {"two_load_combos", combos(c.dataset.two_load_combos)},
                    {"three_load_combos", combos(c.dataset.three_load_combos)}};
    if (c.feature_scale)
        j["features"] = {{"real_power_scale", c.feature_scale->real_power},
                         {"apparent_power_scale", c.feature_scale->apparent_power}};
    nlohmann::json net = net_config_to_json(c.net);
    j["net"] = net;
    const auto& e = c.experiments;
    j["experiments"] = {{"runs", e.runs},
                        {"e1", {{"train_per_combo", e.e1_train}, {"test_per_combo", e.e1_test}}},
                        {"e2", {{"singles_train", e.e2_singles_train}, {"multis_train", e.e2_multis_train}}},
                        {"e3",
                         {{"train_per_combo", e.e3_train_per_combo},
                          {"runs_per_combo", e.e3_runs_per_combo},
                          {"combos", e.e3_combos}}},
                        {"mot", {{"singles_train", e.mot_singles_train}, {"singles_test", e.mot_singles_test}}}};
    return j;
}

}  // namespace plugsense
