#pragma once

// Labeled synthetic dataset: generation, training targets, per-combination
// splits and the line-delimited record format.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plugsense/error.hpp"
#include "plugsense/loads.hpp"
#include "plugsense/parallel.hpp"
#include "plugsense/probe.hpp"
#include "plugsense/rng.hpp"

namespace plugsense {

inline constexpr std::size_t kMaxLoads = 3;
inline constexpr int kDatasetSchemaVersion = 1;

/// One to three distinct appliance classes, kept sorted by class index.
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(std::initializer_list<LoadClass> classes) : LabelSet(std::vector<LoadClass>(classes)) {}
    explicit LabelSet(std::vector<LoadClass> classes) : classes_(std::move(classes)) {
        std::sort(classes_.begin(), classes_.end());
        if (classes_.empty() || classes_.size() > kMaxLoads)
            throw InvalidArgument("a label set holds 1 to 3 classes, got " + std::to_string(classes_.size()));
        if (std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end())
            throw InvalidArgument("duplicate class in label set");
    }

    [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }
    [[nodiscard]] const std::vector<LoadClass>& classes() const noexcept { return classes_; }
    [[nodiscard]] bool contains(LoadClass c) const {
        return std::binary_search(classes_.begin(), classes_.end(), c);
    }
    [[nodiscard]] std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        for (auto c : classes_) out.push_back(index_of(c));
        return out;
    }

    /// Labels sorted lexicographically and joined by '+'.
    [[nodiscard]] std::string combo_id() const {
        std::vector<std::string_view> names;
        for (auto c : classes_) names.push_back(label(c));
        std::sort(names.begin(), names.end());
        std::string out;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) out += '+';
            out += names[i];
        }
        return out;
    }

    friend auto operator<=>(const LabelSet&, const LabelSet&) = default;

private:
    std::vector<LoadClass> classes_;
};

struct Sample {
    MeasurementMatrices matrices;
    LabelSet labels;
    std::string combo_id;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    std::vector<Sample> samples;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
    friend bool operator==(const Dataset&, const Dataset&) = default;

    /// Sample indices grouped by combo_id, groups in order of first appearance.
    [[nodiscard]] std::vector<std::pair<std::string, std::vector<std::size_t>>> groups() const {
        std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
        std::map<std::string, std::size_t, std::less<>> where;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto [it, fresh] = where.try_emplace(samples[i].combo_id, out.size());
            if (fresh) out.push_back({samples[i].combo_id, {}});
            out[it->second].second.push_back(i);
        }
        return out;
    }

    [[nodiscard]] Dataset subset(std::span<const std::size_t> idx) const {
        Dataset d;
        d.samples.reserve(idx.size());
        for (auto i : idx) d.samples.push_back(samples.at(i));
        return d;
    }
};

/// All unordered pairs of distinct classes, in class-index order.
inline std::vector<LabelSet> all_two_load_combos() {
    std::vector<LabelSet> out;
    for (std::size_t a = 0; a < kNumClasses; ++a)
        for (std::size_t b = a + 1; b < kNumClasses; ++b) out.push_back({class_from_index(a), class_from_index(b)});
    return out;
}

struct DatasetSpec {
    std::size_t singles_per_class = 250;
    std::vector<LabelSet> two_load_combos = all_two_load_combos();
    std::size_t samples_per_two_load = 100;
    std::vector<LabelSet> three_load_combos = {
        {LoadClass::fan, LoadClass::ledbulb, LoadClass::INCANDESCENTS},
        {LoadClass::fan, LoadClass::ledspotlight, LoadClass::solderingiron},
    };
    std::size_t samples_per_three_load = 100;
    std::uint64_t master_seed = 42;
    /// Type III instances are aged by a uniform draw from [0, horizon] seconds.
    double drift_horizon_s = 4.0 * 3600.0;

    void validate() const {
        for (const auto& c : two_load_combos)
            if (c.size() != 2) throw ConfigError("dataset.two_load_combos entries must hold 2 classes");
        for (const auto& c : three_load_combos)
            if (c.size() != 3) throw ConfigError("dataset.three_load_combos entries must hold 3 classes");
        auto unique = [](std::vector<LabelSet> v) {
            std::sort(v.begin(), v.end());
            return std::adjacent_find(v.begin(), v.end()) == v.end();
        };
        if (!unique(two_load_combos) || !unique(three_load_combos))
            throw ConfigError("dataset combos must not repeat");
        if (!(drift_horizon_s >= 0.0)) throw ConfigError("dataset.drift_horizon_s must be >= 0");
    }

    [[nodiscard]] std::size_t total_samples() const {
        return kNumClasses * singles_per_class + two_load_combos.size() * samples_per_two_load +
               three_load_combos.size() * samples_per_three_load;
    }
};

/// Everything a probe run needs besides the bank itself.
struct SimulationContext {
    SupplyConfig supply;
    DimmingSchedule schedule;
    ClassTable classes = default_class_table();
};

namespace detail {

template <typename E>
[[noreturn]] void rethrow_with_combo(const E& e, const std::string& combo_id, std::size_t index) {
    throw E(combo_id + " #" + std::to_string(index) + ": " + e.what());
}

}  // namespace detail

/// Simulates sample `index` of a combination. Every member is a fresh
/// jittered instance; Type III members are aged by a random amount of use.
inline Sample simulate_sample(const LabelSet& labels, std::size_t index, std::uint64_t master_seed,
                              double drift_horizon_s, const SimulationContext& ctx) {
    const std::string combo = labels.combo_id();
    try {
        Rng rng(derive_seed(master_seed, combo, index));
        std::vector<LoadInstance> bank;
        for (auto cls : labels.classes()) {
            const ClassSpec& spec = ctx.classes[index_of(cls)];
            LoadInstance inst = instantiate(cls, spec, ctx.supply, rng);
            if (appliance_type(cls) == ApplianceType::III) {
                const double elapsed = rng.uniform(0.0, drift_horizon_s);
                inst = drift(std::move(inst), elapsed, spec.jitter.drift, ctx.supply, rng);
            }
            bank.push_back(std::move(inst));
        }
        return {run_probe(bank, ctx.supply, ctx.schedule), labels, combo};
    } catch (const NonConvergence& e) {
        detail::rethrow_with_combo(e, combo, index);
    } catch (const NumericalOverflow& e) {
        detail::rethrow_with_combo(e, combo, index);
    }
}

/// Generates the dataset: singles in class order, then the two- and
/// three-load combinations in spec order. Output does not depend on `jobs`.
inline Dataset generate(const DatasetSpec& spec, const SimulationContext& ctx, unsigned jobs = 1) {
    spec.validate();
    std::vector<std::pair<LabelSet, std::size_t>> plan;
    for (auto cls : all_classes())
        for (std::size_t i = 0; i < spec.singles_per_class; ++i) plan.emplace_back(LabelSet{cls}, i);
    for (const auto& c : spec.two_load_combos)
        for (std::size_t i = 0; i < spec.samples_per_two_load; ++i) plan.emplace_back(c, i);
    for (const auto& c : spec.three_load_combos)
        for (std::size_t i = 0; i < spec.samples_per_three_load; ++i) plan.emplace_back(c, i);

    Dataset ds;
    ds.samples.resize(plan.size());
    parallel_for(plan.size(), jobs, [&](std::size_t k) {
        ds.samples[k] = simulate_sample(plan[k].first, plan[k].second, spec.master_seed, spec.drift_horizon_s, ctx);
    });
    return ds;
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

inline constexpr std::size_t kCountOutputs = 3;

struct TargetVector {
    std::vector<double> class_part;             // K entries, 1/N at present classes
    std::array<double, kCountOutputs> count_part{};  // one-hot at N - 1
};

inline TargetVector encode_target(std::span<const std::size_t> classes, std::size_t num_classes) {
    if (classes.empty()) throw InvalidArgument("encode_target: empty label set");
    if (classes.size() > kMaxLoads) throw InvalidArgument("encode_target: more than 3 labels");
    TargetVector t;
    t.class_part.assign(num_classes, 0.0);
    const double share = 1.0 / static_cast<double>(classes.size());
    for (auto c : classes) {
        if (c >= num_classes) throw InvalidArgument("encode_target: class index out of range");
        if (t.class_part[c] != 0.0) throw InvalidArgument("encode_target: duplicate class");
        t.class_part[c] = share;
    }
    t.count_part[classes.size() - 1] = 1.0;
    return t;
}

inline TargetVector encode_target(const LabelSet& labels, std::size_t num_classes = kNumClasses) {
    const auto idx = labels.indices();
    return encode_target(idx, num_classes);
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Training count and test count for one category; no test count means
/// "everything not used for training".
struct SplitCounts {
    std::size_t train = 0;
    std::optional<std::size_t> test;
};

struct SplitPlan {
    SplitCounts singles;
    SplitCounts multis;

    static SplitPlan uniform(std::size_t train, std::size_t test) { return {{train, test}, {train, test}}; }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Random selection without replacement inside every combo_id, deterministic
/// per seed. Indices refer to `ds`.
inline SplitIndices split_indices(const Dataset& ds, const SplitPlan& plan, std::uint64_t seed) {
    SplitIndices out;
    for (auto& [combo, members] : ds.groups()) {
        const bool single = combo.find('+') == std::string::npos;
        const SplitCounts& counts = single ? plan.singles : plan.multis;
        const std::size_t test = counts.test.value_or(members.size() >= counts.train ? members.size() - counts.train : 0);
        const std::size_t need = counts.train + test;
        if (members.size() < need || (!counts.test && members.size() < counts.train))
            throw InsufficientSamples(combo, members.size(), need);
        Rng rng(derive_seed(seed, combo, 0));
        shuffle(members.begin(), members.end(), rng);
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(counts.train));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(counts.train),
                        members.begin() + static_cast<std::ptrdiff_t>(need));
    }
    return out;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitPlan& plan, std::uint64_t seed) {
    const auto idx = split_indices(ds, plan, seed);
    return {ds.subset(idx.train), ds.subset(idx.test)};
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t train_per_combo, std::size_t test_per_combo,
                                         std::uint64_t seed) {
    return split(ds, SplitPlan::uniform(train_per_combo, test_per_combo), seed);
}

// ---------------------------------------------------------------------------
// Record format
// ---------------------------------------------------------------------------
//
// Line 1:  {"format":"plugsense-dataset","schema_version":1,"samples":N}
// Line 2+: {"schema_version":1,"combo_id":"...","labels":[...],
//           "v_rms":[280],"i_rms":[280],"real_power":[280]}
// Matrices are flattened row-major; numbers use shortest round-trip form.

namespace detail {

inline nlohmann::json grid_to_json(const Grid& g) { return nlohmann::json(g.cells); }

inline Grid grid_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != kCells) throw std::runtime_error("matrix must hold 280 numbers");
    Grid g;
    for (std::size_t k = 0; k < kCells; ++k) {
        if (!j[k].is_number()) throw std::runtime_error("matrix entry is not a number");
        g.cells[k] = j[k].get<double>();
    }
    return g;
}

}  // namespace detail

inline std::string header_line(std::size_t samples) {
    nlohmann::json h;
    h["format"] = "plugsense-dataset";
    h["schema_version"] = kDatasetSchemaVersion;
    h["samples"] = samples;
    return h.dump();
}

inline std::string record_line(const Sample& s) {
    nlohmann::json r;
    r["schema_version"] = kDatasetSchemaVersion;
    r["combo_id"] = s.combo_id;
    auto labels = nlohmann::json::array();
    for (auto c : s.labels.classes()) labels.push_back(std::string(label(c)));
    r["labels"] = labels;
    r["v_rms"] = detail::grid_to_json(s.matrices.v_rms);
    r["i_rms"] = detail::grid_to_json(s.matrices.i_rms);
    r["real_power"] = detail::grid_to_json(s.matrices.real_power);
    return r.dump();
}

inline void save(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << header_line(ds.size()) << '\n';
    for (const auto& s : ds.samples) out << record_line(s) << '\n';
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline Sample parse_record(const std::string& line, std::size_t line_no) {
    nlohmann::json r;
    try {
        r = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptRecord(line_no, e.what());
    }
    try {
        if (!r.is_object()) throw std::runtime_error("record is not an object");
        const int version = r.at("schema_version").get<int>();
        if (version != kDatasetSchemaVersion)
            throw SchemaVersionMismatch("line " + std::to_string(line_no) + ": schema version " +
                                        std::to_string(version) + ", expected " +
                                        std::to_string(kDatasetSchemaVersion));
        std::vector<LoadClass> classes;
        for (const auto& l : r.at("labels")) {
            auto c = parse_class(l.get<std::string>());
            if (!c) throw std::runtime_error("unknown class label '" + l.get<std::string>() + "'");
            classes.push_back(*c);
        }
        Sample s;
        s.labels = LabelSet(std::move(classes));
        s.combo_id = r.at("combo_id").get<std::string>();
        if (s.combo_id != s.labels.combo_id()) throw std::runtime_error("combo_id does not match labels");
        s.matrices.v_rms = detail::grid_from_json(r.at("v_rms"));
        s.matrices.i_rms = detail::grid_from_json(r.at("i_rms"));
        s.matrices.real_power = detail::grid_from_json(r.at("real_power"));
        s.matrices.validate();
        return s;
    } catch (const SchemaVersionMismatch&) {
        throw;
    } catch (const std::exception& e) {
        throw CorruptRecord(line_no, e.what());
    }
}

inline Dataset load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw CorruptRecord(1, "missing header");
    std::size_t expected = 0;
    try {
        const auto h = nlohmann::json::parse(line);
        if (h.at("format").get<std::string>() != "plugsense-dataset") throw std::runtime_error("not a dataset file");
        const int version = h.at("schema_version").get<int>();
        if (version != kDatasetSchemaVersion)
            throw SchemaVersionMismatch("dataset schema version " + std::to_string(version) + ", expected " +
                                        std::to_string(kDatasetSchemaVersion));
        expected = h.at("samples").get<std::size_t>();
    } catch (const SchemaVersionMismatch&) {
        throw;
    } catch (const std::exception& e) {
        throw CorruptRecord(1, std::string("bad header: ") + e.what());
    }
    Dataset ds;
    ds.samples.reserve(expected);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (ds.size() == expected) {
            if (line.empty()) continue;
            throw CorruptRecord(line_no, "more records than the header declares");
        }
        ds.samples.push_back(parse_record(line, line_no));
    }
    if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
    if (ds.size() != expected) throw CorruptRecord(line_no + 1, "file ends before all declared records");
    return ds;
}

}  // namespace plugsense
