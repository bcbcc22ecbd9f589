#pragma once

// Parametric circuit models for the appliance classes, per-instance parameter
// jitter and Type III consumption drift.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plugsense/error.hpp"
#include "plugsense/rng.hpp"
#include "plugsense/waveform.hpp"

namespace plugsense {

inline constexpr std::size_t kNumClasses = 11;

enum class LoadClass : std::uint8_t {
    USB,
    batterycharger4A,
    batterycharger800mA,
    fan,
    hairdryer,
    ledbulb,
    ledspotlight,
    INCANDESCENTS,
    laptop,
    monitor,
    solderingiron,
};

enum class ApplianceType : std::uint8_t { I = 1, II = 2, III = 3, IV = 4 };

inline constexpr std::array<std::string_view, kNumClasses> kClassLabels = {
    "USB",          "batterycharger4A", "batterycharger800mA", "fan",
    "hairdryer",    "ledbulb",          "ledspotlight",        "INCANDESCENTS",
    "laptop",       "monitor",          "solderingiron",
};

inline constexpr std::array<ApplianceType, kNumClasses> kClassTypes = {
    ApplianceType::III, ApplianceType::III, ApplianceType::III, ApplianceType::II,
    ApplianceType::I,   ApplianceType::I,   ApplianceType::I,   ApplianceType::I,
    ApplianceType::III, ApplianceType::I,   ApplianceType::I,
};

constexpr std::size_t index_of(LoadClass c) noexcept { return static_cast<std::size_t>(c); }
constexpr std::string_view label(LoadClass c) noexcept { return kClassLabels[index_of(c)]; }
constexpr ApplianceType appliance_type(LoadClass c) noexcept { return kClassTypes[index_of(c)]; }

inline LoadClass class_from_index(std::size_t i) {
    if (i >= kNumClasses) throw InvalidArgument("class index out of range: " + std::to_string(i));
    return static_cast<LoadClass>(i);
}

inline std::optional<LoadClass> parse_class(std::string_view name) {
    for (std::size_t i = 0; i < kNumClasses; ++i)
        if (kClassLabels[i] == name) return static_cast<LoadClass>(i);
    return std::nullopt;
}

inline constexpr std::array<LoadClass, kNumClasses> all_classes() {
    std::array<LoadClass, kNumClasses> out{};
    for (std::size_t i = 0; i < kNumClasses; ++i) out[i] = static_cast<LoadClass>(i);
    return out;
}

// ---------------------------------------------------------------------------
// Model families
// ---------------------------------------------------------------------------

enum class ModelFamily { resistive, incandescent, motor, rectifier, charger };

inline constexpr std::array<std::string_view, 5> kFamilyNames = {
    "resistive", "incandescent", "motor", "rectifier", "charger"};

inline std::optional<ModelFamily> parse_family(std::string_view name) {
    for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
        if (kFamilyNames[i] == name) return static_cast<ModelFamily>(i);
    return std::nullopt;
}

inline std::string_view family_name(ModelFamily f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

/// Named numeric parameters of one model parameterization.
using ParamSet = std::map<std::string, double, std::less<>>;

namespace detail {

inline double require_param(const ParamSet& p, std::string_view key, std::string_view family) {
    auto it = p.find(key);
    if (it == p.end())
        throw ConfigError(std::string(family) + " model is missing parameter '" + std::string(key) + "'");
    if (!std::isfinite(it->second))
        throw ConfigError(std::string(family) + " parameter '" + std::string(key) + "' is not finite");
    return it->second;
}

inline double require_positive(const ParamSet& p, std::string_view key, std::string_view family) {
    const double v = require_param(p, key, family);
    if (!(v > 0.0))
        throw ConfigError(std::string(family) + " parameter '" + std::string(key) + "' must be > 0");
    return v;
}

inline void check_state(double x, double lo, double hi, const char* what) {
    if (!std::isfinite(x) || x < lo || x > hi)
        throw NumericalOverflow(std::string(what) + " left its bounds: " + std::to_string(x));
}

}  // namespace detail

/// i = v / R.
struct ResistiveModel {
    double resistance = 0.0;

    static ResistiveModel from_params(const ParamSet& p, const SupplyConfig& supply) {
        const double power = detail::require_positive(p, "power_w", "resistive");
        return {supply.nominal_rms_voltage * supply.nominal_rms_voltage / power};
    }

    [[nodiscard]] double current(double v, double /*dt*/) const { return v / resistance; }
    void advance(double /*v*/, double /*dt*/) {}
};

/// Filament whose resistance rises from cold to hot with a first-order
/// thermal state normalised so that 1 is the uncut steady state.
struct IncandescentModel {
    double cold_resistance = 0.0;
    double hot_cold_ratio = 1.0;
    double rated_power = 0.0;   // W at nominal voltage, fully hot
    double time_constant = 0.0; // s
    double temperature = 1.0;   // normalised

    static IncandescentModel from_params(const ParamSet& p, const SupplyConfig& supply) {
        const double power = detail::require_positive(p, "power_w", "incandescent");
        const double ratio = detail::require_positive(p, "hot_cold_ratio", "incandescent");
        const double tau = detail::require_positive(p, "tau_s", "incandescent");
        if (ratio < 1.0) throw ConfigError("incandescent hot_cold_ratio must be >= 1");
        if (tau < 20.0 * supply.dt())
            throw ConfigError("incandescent tau_s too small for explicit integration");
        const double v = supply.nominal_rms_voltage;
        IncandescentModel m;
        m.rated_power = power;
        m.hot_cold_ratio = ratio;
        m.cold_resistance = v * v / power / ratio;
        m.time_constant = tau;
        return m;
    }

    [[nodiscard]] double resistance() const {
        return cold_resistance * (1.0 + (hot_cold_ratio - 1.0) * temperature);
    }
    [[nodiscard]] double current(double v, double /*dt*/) const { return v / resistance(); }
    void advance(double v, double dt) {
        const double p = v * v / resistance();
        temperature += dt * (p / rated_power - temperature) / time_constant;
        detail::check_state(temperature, 0.0, 50.0, "filament temperature");
    }
};

/// Series R-L branch integrated with the trapezoidal rule. The fan's speed
/// setting selects one of three R/L pairs and stays fixed per measurement.
struct MotorModel {
    double resistance = 0.0;
    double inductance = 0.0;
    int speed = 1;
    double i_l = 0.0;
    double v_prev = 0.0;

    static MotorModel from_params(const ParamSet& p, const SupplyConfig& supply, int speed) {
        const double power = detail::require_positive(p, "power_w", "motor");
        const double pf = detail::require_positive(p, "power_factor", "motor");
        if (pf > 1.0) throw ConfigError("motor power_factor must be <= 1");
        static constexpr std::array<std::string_view, 3> keys = {"speed_low", "speed_mid", "speed_high"};
        const double scale = detail::require_positive(p, keys.at(static_cast<std::size_t>(speed)), "motor");
        const double v = supply.nominal_rms_voltage;
        const double z = v * v * pf / (power * scale);
        MotorModel m;
        m.resistance = z * pf;
        m.inductance = z * std::sqrt(std::max(0.0, 1.0 - pf * pf)) / supply.omega();
        m.speed = speed;
        return m;
    }

    [[nodiscard]] double current(double v, double dt) const {
        if (inductance == 0.0) return v / resistance;
        const double a = dt * resistance / (2.0 * inductance);
        const double b = dt / (2.0 * inductance);
        return ((1.0 - a) * i_l + b * (v_prev + v)) / (1.0 + a);
    }
    void advance(double v, double dt) {
        i_l = current(v, dt);
        v_prev = v;
        detail::check_state(i_l, -1e4, 1e4, "motor current");
    }
};

enum class DcDraw { constant_power, led_string };

/// Full bridge into a smoothing capacitor through a series resistance, with a
/// DC-side draw that is either a regulated converter (constant power above an
/// undervoltage threshold) or an LED string behind a linear current regulator.
///
/// The capacitor is integrated implicitly while the bridge conducts, so any
/// R*C is stable at the sampling step.
struct RectifierModel {
    DcDraw draw = DcDraw::constant_power;
    double dc_power = 0.0;        // W, constant_power
    double nominal_dc_power = 0.0;
    double threshold_v = 0.0;     // UVLO or LED string forward voltage
    double led_current = 0.0;     // A, led_string
    double led_resistance = 0.0;  // ohm, led_string dynamic resistance
    double capacitance = 0.0;
    double series_resistance = 0.0;
    double cap_voltage = 0.0;
    double cap_limit = 0.0;

    static RectifierModel from_params(const ParamSet& p, const SupplyConfig& supply) {
        RectifierModel m;
        const double power = detail::require_positive(p, "power_w", "rectifier");
        const double mode = detail::require_param(p, "led_string", "rectifier");
        m.draw = mode != 0.0 ? DcDraw::led_string : DcDraw::constant_power;
        m.capacitance = detail::require_positive(p, "capacitance_f", "rectifier");
        m.series_resistance = detail::require_positive(p, "series_resistance_ohm", "rectifier");
        m.threshold_v = detail::require_positive(p, "threshold_v", "rectifier");
        const double vpk = supply.peak_voltage();
        if (m.threshold_v >= vpk) throw ConfigError("rectifier threshold_v must be below the supply peak");
        if (m.draw == DcDraw::led_string) {
            m.led_resistance = detail::require_positive(p, "led_resistance_ohm", "rectifier");
            m.led_current = power / (0.95 * vpk);
        }
        m.dc_power = power;
        m.nominal_dc_power = power;
        m.cap_voltage = 0.95 * vpk;
        m.cap_limit = 2.0 * vpk;
        return m;
    }

    [[nodiscard]] double dc_current() const {
        const double vc = cap_voltage;
        if (draw == DcDraw::constant_power) {
            if (vc >= threshold_v) return dc_power / vc;
            // Below the threshold the converter falls off resistively.
            return std::max(0.0, dc_power / threshold_v * (vc / threshold_v));
        }
        return std::clamp((vc - threshold_v) / led_resistance, 0.0, led_current);
    }

    /// Capacitor voltage at the end of the step and bridge current for `v`.
    [[nodiscard]] std::pair<double, double> step(double v, double dt) const {
        const double mag = std::abs(v);
        const double idc = dc_current();
        const double k = dt / (series_resistance * capacitance);
        const double vc_on = (cap_voltage + dt / capacitance * (mag / series_resistance - idc)) / (1.0 + k);
        if (mag > vc_on) return {vc_on, (mag - vc_on) / series_resistance};
        return {std::max(0.0, cap_voltage - dt * idc / capacitance), 0.0};
    }

    [[nodiscard]] double current(double v, double dt) const {
        const double ib = step(v, dt).second;
        return v < 0.0 ? -ib : ib;
    }
    void advance(double v, double dt) {
        cap_voltage = step(v, dt).first;
        detail::check_state(cap_voltage, 0.0, cap_limit, "capacitor voltage");
    }
};

/// Transformer and bridge charging a lead-acid battery whose EMF rises with
/// state of charge. Secondary current is (|v|/n - E) / R while positive.
struct ChargerModel {
    double turns_ratio = 1.0;     // primary / secondary
    double series_resistance = 0.0;
    double emf_empty = 0.0;
    double emf_full = 0.0;
    double capacity_as = 0.0;     // ampere-seconds
    double soc = 0.5;

    /// Mean line power for an uncut sine of secondary peak `vs` into EMF `e`
    /// through unit resistance.
    static double unit_power(double vs, double e) {
        if (e >= vs) return 0.0;
        const double t1 = std::asin(e / vs);
        return vs / std::numbers::pi *
               (vs * ((std::numbers::pi - 2.0 * t1) / 2.0 + std::sin(2.0 * t1) / 2.0) - 2.0 * e * std::cos(t1));
    }

    /// Mean secondary (charging) current for an uncut sine.
    [[nodiscard]] double mean_charge_current(double vpk) const {
        const double vs = vpk / turns_ratio;
        const double e = emf();
        if (e >= vs) return 0.0;
        const double t1 = std::asin(e / vs);
        return (2.0 * vs * std::cos(t1) - e * (std::numbers::pi - 2.0 * t1)) /
               (std::numbers::pi * series_resistance);
    }

    static ChargerModel from_params(const ParamSet& p, const SupplyConfig& supply, double soc) {
        const double power = detail::require_positive(p, "power_w", "charger");
        const double vs = detail::require_positive(p, "secondary_peak_v", "charger");
        ChargerModel m;
        m.emf_empty = detail::require_positive(p, "emf_empty_v", "charger");
        m.emf_full = detail::require_positive(p, "emf_full_v", "charger");
        m.capacity_as = 3600.0 * detail::require_positive(p, "capacity_ah", "charger");
        if (m.emf_full < m.emf_empty) throw ConfigError("charger emf_full_v must be >= emf_empty_v");
        if (m.emf_full >= vs) throw ConfigError("charger emf_full_v must be below secondary_peak_v");
        const double vpk = supply.peak_voltage();
        m.turns_ratio = vpk / vs;
        // power_w is the draw at half charge.
        const double e_mid = 0.5 * (m.emf_empty + m.emf_full);
        m.series_resistance = unit_power(vs, e_mid) / power;
        m.soc = soc;
        return m;
    }

    [[nodiscard]] double emf() const { return emf_empty + (emf_full - emf_empty) * soc; }

    [[nodiscard]] double secondary_current(double v) const {
        return std::max(0.0, std::abs(v) / turns_ratio - emf()) / series_resistance;
    }

    [[nodiscard]] double current(double v, double /*dt*/) const {
        const double is = secondary_current(v) / turns_ratio;
        return v < 0.0 ? -is : is;
    }
    void advance(double v, double dt) {
        soc = std::min(1.0, soc + dt * secondary_current(v) / capacity_as);
        detail::check_state(soc, 0.0, 1.0, "state of charge");
    }
};

using LoadModel = std::variant<ResistiveModel, IncandescentModel, MotorModel, RectifierModel, ChargerModel>;

// ---------------------------------------------------------------------------
// Class specifications and instances
// ---------------------------------------------------------------------------

/// Per-parameter relative spreads (uniform on [1 - s, 1 + s]) and the Type III
/// drift magnitude.
struct JitterSpec {
    std::map<std::string, double, std::less<>> spreads;
    double drift = 0.0;

    void validate(std::string_view where) const {
        for (const auto& [k, s] : spreads)
            if (!(s >= 0.0 && s < 0.5))
                throw ConfigError(std::string(where) + ": jitter spread for '" + k + "' must be in [0, 0.5)");
        if (!(drift >= 0.0 && drift < 0.5))
            throw ConfigError(std::string(where) + ": drift must be in [0, 0.5)");
    }
};

/// Nominal description of one appliance class. Grouped classes carry more than
/// one parameterization; each instance picks one uniformly.
struct ClassSpec {
    ModelFamily family = ModelFamily::resistive;
    std::vector<ParamSet> variants;
    JitterSpec jitter;
};

using ClassTable = std::array<ClassSpec, kNumClasses>;

class LoadInstance {
public:
    LoadInstance(LoadClass cls, std::size_t variant, ParamSet params, LoadModel model)
        : cls_(cls), variant_(variant), params_(std::move(params)), model_(std::move(model)) {}

    [[nodiscard]] LoadClass load_class() const noexcept { return cls_; }
    [[nodiscard]] std::size_t variant() const noexcept { return variant_; }
    /// The jittered parameter record this instance was built from.
    [[nodiscard]] const ParamSet& params() const noexcept { return params_; }
    [[nodiscard]] const LoadModel& model() const noexcept { return model_; }
    [[nodiscard]] LoadModel& model() noexcept { return model_; }

    [[nodiscard]] double current(double v, double dt) const {
        return std::visit([&](const auto& m) { return m.current(v, dt); }, model_);
    }
    void advance(double v, double dt) {
        std::visit([&](auto& m) { m.advance(v, dt); }, model_);
    }

    friend bool operator==(const LoadInstance& a, const LoadInstance& b) {
        return a.cls_ == b.cls_ && a.variant_ == b.variant_ && a.params_ == b.params_;
    }

private:
    LoadClass cls_;
    std::size_t variant_;
    ParamSet params_;
    LoadModel model_;
};

static_assert(CircuitLoad<LoadInstance>);

/// Draws one instance of `cls`: picks a variant, perturbs every parameter by
/// its spread and initialises the model state. Deterministic given `rng`.
inline LoadInstance instantiate(LoadClass cls, const ClassSpec& spec, const SupplyConfig& supply, Rng& rng) {
    if (spec.variants.empty())
        throw ConfigError("class " + std::string(label(cls)) + " has no parameter variants");
    const std::size_t variant = spec.variants.size() > 1 ? rng.below(spec.variants.size()) : 0;
    ParamSet params = spec.variants[variant];
    for (auto& [name, value] : params) {
        // One draw per parameter regardless of spread keeps streams aligned.
        const double u = rng.uniform(-1.0, 1.0);
        auto it = spec.jitter.spreads.find(name);
        if (it != spec.jitter.spreads.end() && value != 0.0) value *= 1.0 + it->second * u;
    }
    const int speed = static_cast<int>(rng.below(3));
    const double soc = rng.uniform(0.0, 0.8);

    LoadModel model = [&]() -> LoadModel {
        switch (spec.family) {
            case ModelFamily::resistive: return ResistiveModel::from_params(params, supply);
            case ModelFamily::incandescent: return IncandescentModel::from_params(params, supply);
            case ModelFamily::motor: return MotorModel::from_params(params, supply, speed);
            case ModelFamily::rectifier: return RectifierModel::from_params(params, supply);
            case ModelFamily::charger: return ChargerModel::from_params(params, supply, soc);
        }
        throw ConfigError("unknown model family");
    }();
    return LoadInstance(cls, variant, std::move(params), std::move(model));
}

/// Un-jittered instance of one variant: middle fan speed, half-charged battery.
inline LoadInstance nominal_instance(LoadClass cls, const ClassSpec& spec, std::size_t variant,
                                     const SupplyConfig& supply) {
    if (variant >= spec.variants.size()) throw InvalidArgument("nominal_instance: variant out of range");
    const ParamSet& params = spec.variants[variant];
    LoadModel model = [&]() -> LoadModel {
        switch (spec.family) {
            case ModelFamily::resistive: return ResistiveModel::from_params(params, supply);
            case ModelFamily::incandescent: return IncandescentModel::from_params(params, supply);
            case ModelFamily::motor: return MotorModel::from_params(params, supply, 1);
            case ModelFamily::rectifier: return RectifierModel::from_params(params, supply);
            case ModelFamily::charger: return ChargerModel::from_params(params, supply, 0.5);
        }
        throw ConfigError("unknown model family");
    }();
    return LoadInstance(cls, variant, params, std::move(model));
}

/// Instantaneous current at applied voltage `v`, then the state update over dt.
inline double load_current(LoadInstance& inst, double v, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("load_current: dt must be > 0");
    const double i = inst.current(v, dt);
    inst.advance(v, dt);
    return i;
}

inline constexpr double kDriftStepSeconds = 60.0;

/// Advances a Type III instance through `elapsed` seconds of use: converter
/// draws follow a bounded multiplicative random walk, batteries charge.
/// Instances of other types are returned unchanged.
inline LoadInstance drift(LoadInstance inst, double elapsed, double magnitude,
                          const SupplyConfig& supply, Rng& rng) {
    if (elapsed < 0.0) throw InvalidArgument("drift: elapsed must be >= 0");
    if (appliance_type(inst.load_class()) != ApplianceType::III || elapsed == 0.0) return inst;
    const auto steps = static_cast<long>(std::ceil(elapsed / kDriftStepSeconds));
    std::visit(
        [&](auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, RectifierModel>) {
                if (magnitude == 0.0) return;
                const double lo = m.nominal_dc_power * (1.0 - magnitude);
                const double hi = m.nominal_dc_power * (1.0 + magnitude);
                for (long s = 0; s < steps; ++s) {
                    const double h = std::min(kDriftStepSeconds, elapsed - static_cast<double>(s) * kDriftStepSeconds);
                    const double sigma = 0.25 * magnitude * std::sqrt(h / kDriftStepSeconds);
                    double p = m.dc_power * std::exp(sigma * rng.normal());
                    // Reflect at the bounds.
                    if (p > hi) p = std::max(lo, 2.0 * hi - p);
                    if (p < lo) p = std::min(hi, 2.0 * lo - p);
                    m.dc_power = p;
                }
                if (m.draw == DcDraw::led_string) m.led_current = m.dc_power / (0.95 * supply.peak_voltage());
            } else if constexpr (std::is_same_v<M, ChargerModel>) {
                for (long s = 0; s < steps && m.soc < 1.0; ++s) {
                    const double h = std::min(kDriftStepSeconds, elapsed - static_cast<double>(s) * kDriftStepSeconds);
                    const double rate = 1.0 + magnitude * rng.uniform(-1.0, 1.0);
                    m.soc = std::min(1.0, m.soc + h * rate * m.mean_charge_current(supply.peak_voltage()) / m.capacity_as);
                }
            }
        },
        inst.model());
    return inst;
}

// ---------------------------------------------------------------------------
// Default class table
// ---------------------------------------------------------------------------

/// Household-scale nominal parameters. Power ratings are the uncut draw at
/// nominal voltage (chargers: at half charge).
inline ClassTable default_class_table() {
    ClassTable t{};
    auto rect = [](double power, double cap, double rin, double threshold) {
        return ParamSet{{"power_w", power}, {"led_string", 0.0}, {"capacitance_f", cap},
                        {"series_resistance_ohm", rin}, {"threshold_v", threshold}};
    };
    auto led = [](double power, double cap, double rin, double vf, double rd) {
        return ParamSet{{"power_w", power}, {"led_string", 1.0}, {"capacitance_f", cap},
                        {"series_resistance_ohm", rin}, {"threshold_v", vf}, {"led_resistance_ohm", rd}};
    };
    auto charger = [](double power, double vs, double e0, double e1, double ah) {
        return ParamSet{{"power_w", power}, {"secondary_peak_v", vs}, {"emf_empty_v", e0},
                        {"emf_full_v", e1}, {"capacity_ah", ah}};
    };
    const JitterSpec typical{{{"power_w", 0.05}, {"capacitance_f", 0.1}, {"series_resistance_ohm", 0.1}}, 0.0};

    t[index_of(LoadClass::USB)] = {ModelFamily::rectifier,
                                   {rect(5.0, 4.7e-6, 22.0, 60.0), rect(9.0, 10e-6, 15.0, 60.0)},
                                   {typical.spreads, 0.2}};
    t[index_of(LoadClass::batterycharger4A)] = {
        ModelFamily::charger, {charger(60.0, 16.5, 12.2, 14.4, 40.0)},
        {{{"power_w", 0.05}, {"secondary_peak_v", 0.02}}, 0.2}};
    t[index_of(LoadClass::batterycharger800mA)] = {
        ModelFamily::charger, {charger(10.0, 18.0, 11.8, 13.6, 7.0)},
        {{{"power_w", 0.05}, {"secondary_peak_v", 0.02}}, 0.2}};
    t[index_of(LoadClass::fan)] = {
        ModelFamily::motor,
        {ParamSet{{"power_w", 40.0}, {"power_factor", 0.85}, {"speed_low", 0.75}, {"speed_mid", 1.0}, {"speed_high", 1.25}}},
        {{{"power_w", 0.05}, {"power_factor", 0.03}}, 0.0}};
    t[index_of(LoadClass::hairdryer)] = {ModelFamily::resistive, {ParamSet{{"power_w", 1200.0}}},
                                         {{{"power_w", 0.005}}, 0.0}};
    t[index_of(LoadClass::ledbulb)] = {ModelFamily::rectifier, {led(12.0, 4.7e-6, 47.0, 220.0, 300.0)},
                                       {typical.spreads, 0.0}};
    t[index_of(LoadClass::ledspotlight)] = {ModelFamily::rectifier, {led(15.0, 2.2e-6, 33.0, 120.0, 300.0)},
                                            {typical.spreads, 0.0}};
    t[index_of(LoadClass::INCANDESCENTS)] = {
        ModelFamily::incandescent,
        {ParamSet{{"power_w", 100.0}, {"hot_cold_ratio", 10.0}, {"tau_s", 0.06}},
         ParamSet{{"power_w", 220.0}, {"hot_cold_ratio", 12.0}, {"tau_s", 0.12}}},
        {{{"power_w", 0.03}, {"hot_cold_ratio", 0.05}, {"tau_s", 0.1}}, 0.0}};
    t[index_of(LoadClass::laptop)] = {ModelFamily::rectifier, {rect(60.0, 120e-6, 3.0, 90.0)},
                                      {typical.spreads, 0.2}};
    t[index_of(LoadClass::monitor)] = {ModelFamily::rectifier, {rect(30.0, 68e-6, 5.0, 100.0)},
                                       {typical.spreads, 0.0}};
    t[index_of(LoadClass::solderingiron)] = {ModelFamily::resistive, {ParamSet{{"power_w", 30.0}}},
                                             {{{"power_w", 0.03}}, 0.0}};
    return t;
}

}  // namespace plugsense
