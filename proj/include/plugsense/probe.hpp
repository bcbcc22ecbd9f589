#pragma once

// The dimming schedule, the three 14x20 measurement matrices it produces and
// the two-channel classifier features derived from them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "plugsense/error.hpp"
#include "plugsense/loads.hpp"
#include "plugsense/waveform.hpp"

namespace plugsense {

inline constexpr std::size_t kRows = 14;  // cutoff ratios
inline constexpr std::size_t kCols = 20;  // AC periods per ratio
inline constexpr std::size_t kCells = kRows * kCols;

/// Row-major 14x20 grid.
struct Grid {
    std::array<double, kCells> cells{};

    double& operator()(std::size_t r, std::size_t c) { return cells[r * kCols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return cells[r * kCols + c]; }
    friend bool operator==(const Grid&, const Grid&) = default;
};

struct DimmingSchedule {
    std::vector<double> ratios = default_ratios();
    int periods_per_ratio = static_cast<int>(kCols);
    int settle_periods = 5;

    /// 0.10, 0.15, ..., 0.75.
    static std::vector<double> default_ratios() {
        std::vector<double> r;
        for (std::size_t i = 0; i < kRows; ++i) r.push_back(static_cast<double>(10 + 5 * i) / 100.0);
        return r;
    }

    void validate() const {
        if (ratios.size() != kRows)
            throw ConfigError("schedule.ratios must list exactly " + std::to_string(kRows) + " ratios");
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            if (!(ratios[i] >= 0.0 && ratios[i] < 1.0)) throw ConfigError("schedule.ratios must be in [0, 1)");
            if (i > 0 && !(ratios[i] > ratios[i - 1]))
                throw ConfigError("schedule.ratios must be strictly increasing");
        }
        if (periods_per_ratio != static_cast<int>(kCols))
            throw ConfigError("schedule.periods_per_ratio must be " + std::to_string(kCols));
        if (settle_periods < 0) throw ConfigError("schedule.settle_periods must be >= 0");
    }

    [[nodiscard]] std::size_t total_periods() const {
        return ratios.size() * static_cast<std::size_t>(periods_per_ratio + settle_periods);
    }
};

struct MeasurementMatrices {
    Grid v_rms;       // V
    Grid i_rms;       // A
    Grid real_power;  // W

    friend bool operator==(const MeasurementMatrices&, const MeasurementMatrices&) = default;

    /// Throws InvalidArgument unless every cell is finite, RMS values are
    /// non-negative and real power is not below -eps.
    void validate(double eps = 1e-6) const {
        for (std::size_t k = 0; k < kCells; ++k) {
            const double v = v_rms.cells[k], i = i_rms.cells[k], p = real_power.cells[k];
            if (!std::isfinite(v) || !std::isfinite(i) || !std::isfinite(p))
                throw InvalidArgument("measurement cell " + std::to_string(k) + " is not finite");
            if (v < 0.0 || i < 0.0) throw InvalidArgument("negative RMS value in cell " + std::to_string(k));
            if (p < -eps) throw InvalidArgument("negative real power in cell " + std::to_string(k));
        }
    }
};

/// Probes the bank with the dimming schedule: for every ratio, `settle_periods`
/// uncut periods (discarded) and then one matrix column per cut period.
template <CircuitLoad L>
MeasurementMatrices run_probe(std::span<L> bank, const SupplyConfig& cfg, const DimmingSchedule& sched) {
    if (bank.empty()) throw InvalidArgument("run_probe: empty load bank");
    sched.validate();
    MeasurementMatrices m;
    const CutoffRatio uncut{0.0};
    for (std::size_t r = 0; r < kRows; ++r) {
        for (int s = 0; s < sched.settle_periods; ++s) simulate_period(bank, uncut, cfg);
        const CutoffRatio cut{sched.ratios[r]};
        for (std::size_t c = 0; c < kCols; ++c) {
            const PeriodTrace t = simulate_period(bank, cut, cfg);
            m.v_rms(r, c) = rms(t.v_load);
            m.i_rms(r, c) = rms(t.i_total);
            m.real_power(r, c) = real_power(t.v_load, t.i_total);
        }
    }
    return m;
}

inline MeasurementMatrices run_probe(std::vector<LoadInstance>& bank, const SupplyConfig& cfg,
                                     const DimmingSchedule& sched) {
    return run_probe(std::span<LoadInstance>(bank), cfg, sched);
}

inline constexpr std::size_t kFeatureChannels = 2;
inline constexpr std::size_t kFeatureSize = kFeatureChannels * kCells;

/// Channel 0: scaled real power. Channel 1: scaled apparent power (V_rms * I_rms).
struct FeatureTensor {
    std::array<double, kFeatureSize> values{};

    [[nodiscard]] std::span<const double, kCells> real_power() const {
        return std::span<const double, kCells>(values.data(), kCells);
    }
    [[nodiscard]] std::span<const double, kCells> apparent_power() const {
        return std::span<const double, kCells>(values.data() + kCells, kCells);
    }
};

struct FeatureScale {
    double real_power = 1.0;
    double apparent_power = 1.0;
};

/// Largest uncut apparent power (V_rms * I_rms) over every class variant at
/// nominal parameters. Used as the default global feature scale.
inline double max_nominal_apparent_power(const ClassTable& table, const SupplyConfig& supply) {
    double best = 0.0;
    const CutoffRatio uncut{0.0};
    for (auto cls : all_classes()) {
        const ClassSpec& spec = table[index_of(cls)];
        for (std::size_t v = 0; v < spec.variants.size(); ++v) {
            std::vector<LoadInstance> bank{nominal_instance(cls, spec, v, supply)};
            for (int k = 0; k < 25; ++k) simulate_period(std::span<LoadInstance>(bank), uncut, supply);
            double s = 0.0;
            for (int k = 0; k < 5; ++k) {
                const PeriodTrace t = simulate_period(std::span<LoadInstance>(bank), uncut, supply);
                s += rms(t.v_load) * rms(t.i_total) / 5.0;
            }
            best = std::max(best, s);
        }
    }
    return best;
}

inline FeatureTensor features(const MeasurementMatrices& m, FeatureScale scale) {
    if (!(scale.real_power > 0.0) || !(scale.apparent_power > 0.0))
        throw InvalidArgument("features: scale divisors must be > 0");
    FeatureTensor f;
    for (std::size_t k = 0; k < kCells; ++k) {
        f.values[k] = m.real_power.cells[k] / scale.real_power;
        f.values[kCells + k] = m.v_rms.cells[k] * m.i_rms.cells[k] / scale.apparent_power;
    }
    return f;
}

}  // namespace plugsense
