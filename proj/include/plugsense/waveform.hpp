#pragma once

// Phase-cut AC supply and the per-sample coupled solve of a parallel load
// bank behind a finite source resistance.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "plugsense/error.hpp"

namespace plugsense {

enum class EdgeMode { leading, trailing };

struct SolverSettings {
    double damping = 0.5;
    double tolerance_a = 1e-9;  // on total current between iterations
    int max_iterations = 50;
};

struct SupplyConfig {
    double mains_frequency = 50.0;        // Hz
    double nominal_rms_voltage = 230.0;   // V
    int samples_per_period = 400;
    double source_resistance = 0.5;       // ohm
    EdgeMode edge_mode = EdgeMode::leading;
    SolverSettings solver{};

    [[nodiscard]] double peak_voltage() const { return std::numbers::sqrt2 * nominal_rms_voltage; }
    [[nodiscard]] double dt() const {
        return 1.0 / (mains_frequency * static_cast<double>(samples_per_period));
    }
    [[nodiscard]] double omega() const { return 2.0 * std::numbers::pi * mains_frequency; }

    void validate() const {
        if (!(mains_frequency > 0.0)) throw ConfigError("supply.mains_frequency must be > 0");
        if (samples_per_period < 100) throw ConfigError("supply.samples_per_period must be >= 100");
        if (!(nominal_rms_voltage > 0.0))
            throw ConfigError("supply.nominal_rms_voltage must be > 0");
        if (!(source_resistance >= 0.0))
            throw ConfigError("supply.source_resistance must be >= 0");
        if (!(solver.damping > 0.0 && solver.damping <= 1.0))
            throw ConfigError("supply.solver.damping must be in (0, 1]");
        if (!(solver.tolerance_a > 0.0)) throw ConfigError("supply.solver.tolerance_a must be > 0");
        if (solver.max_iterations < 1) throw ConfigError("supply.solver.max_iterations must be >= 1");
    }
};

/// Fraction of each AC half-period during which the dimmer disconnects the load.
class CutoffRatio {
public:
    constexpr CutoffRatio() = default;
    explicit CutoffRatio(double ratio) : ratio_(ratio) {
        if (!(ratio >= 0.0 && ratio < 1.0))
            throw InvalidArgument("cutoff ratio must be in [0, 1), got " + std::to_string(ratio));
    }

    [[nodiscard]] constexpr double value() const noexcept { return ratio_; }
    friend constexpr auto operator<=>(CutoffRatio, CutoffRatio) = default;

private:
    double ratio_ = 0.0;
};

struct PeriodTrace {
    std::vector<double> v_load;   // V
    std::vector<double> i_total;  // A
};

namespace detail {

inline double overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace detail

/// Share of the sampling cell centred on `sample_index` during which the
/// dimmer conducts.
///
/// Sample k stands for the cell [k - 1/2, k + 1/2). Firing instants fall on
/// sample points for the standard ratio grid, so the straddling sample is
/// half conducting; weighting it keeps per-period RMS and power second-order
/// accurate instead of first-order.
inline double conducting_fraction(std::size_t sample_index, CutoffRatio cutoff,
                                  const SupplyConfig& cfg) {
    const double alpha = cutoff.value();
    if (alpha == 0.0) return 1.0;
    const double period = static_cast<double>(cfg.samples_per_period);
    const double half = 0.5 * period;
    const double pos = std::fmod(static_cast<double>(sample_index), period);
    const double lo = pos - 0.5;
    const double hi = pos + 0.5;

    double cut = 0.0;
    // The cell can touch at most the neighbouring half-periods.
    const auto first = static_cast<long>(std::floor(lo / half)) - 1;
    const auto last = static_cast<long>(std::floor(hi / half)) + 1;
    for (long n = first; n <= last; ++n) {
        const double start = static_cast<double>(n) * half;
        if (cfg.edge_mode == EdgeMode::leading) {
            cut += detail::overlap(lo, hi, start, start + alpha * half);
        } else {
            cut += detail::overlap(lo, hi, start + (1.0 - alpha) * half, start + half);
        }
    }
    return std::clamp(1.0 - cut, 0.0, 1.0);
}

/// Dimmer output with the load side open: V_pk sin(2 pi k / S), zero inside
/// the cut part of each half-period.
inline double open_circuit_voltage(std::size_t sample_index, CutoffRatio cutoff,
                                   const SupplyConfig& cfg) {
    const auto period = static_cast<std::size_t>(cfg.samples_per_period);
    const std::size_t k = sample_index % period;
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(period);
    const double frac = conducting_fraction(k, cutoff, cfg);
    if (frac == 0.0) return 0.0;
    // Exact zero at the zero crossings keeps cut regions identically zero.
    const double s = (2 * k == period || k == 0) ? 0.0 : std::sin(phase);
    const double v = cfg.peak_voltage() * s;
    return frac == 1.0 ? v : v * std::sqrt(frac);
}

/// Closed-form RMS of the phase-cut sine over a full period.
inline double phase_cut_rms(double peak, CutoffRatio cutoff) {
    const double a = cutoff.value();
    return peak * std::sqrt((1.0 - a) / 2.0 + std::sin(2.0 * std::numbers::pi * a) /
                                                  (4.0 * std::numbers::pi));
}

inline double rms(std::span<const double> samples) {
    if (samples.empty()) throw InvalidArgument("rms: empty input");
    double acc = 0.0;
    for (double x : samples) acc += x * x;
    return std::sqrt(acc / static_cast<double>(samples.size()));
}

inline double real_power(std::span<const double> v, std::span<const double> i) {
    if (v.size() != i.size())
        throw InvalidArgument("real_power: length mismatch (" + std::to_string(v.size()) +
                              " vs " + std::to_string(i.size()) + ")");
    if (v.empty()) throw InvalidArgument("real_power: empty input");
    double acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) acc += v[k] * i[k];
    return acc / static_cast<double>(v.size());
}

/// A load the coupled solver can drive: `current` evaluates a trial voltage
/// without side effects, `advance` commits the accepted voltage for one step.
template <typename L>
concept CircuitLoad = requires(L& load, const L& cload, double v, double dt) {
    { cload.current(v, dt) } -> std::convertible_to<double>;
    load.advance(v, dt);
};

/// Solves one AC period of the bank, sample by sample, starting at a positive
/// zero crossing. Load states are advanced in place.
template <CircuitLoad L>
PeriodTrace simulate_period(std::span<L> bank, CutoffRatio cutoff, const SupplyConfig& cfg) {
    if (bank.empty()) throw InvalidArgument("simulate_period: empty load bank");
    const auto n = static_cast<std::size_t>(cfg.samples_per_period);
    const double dt = cfg.dt();
    const double rs = cfg.source_resistance;
    const auto& solver = cfg.solver;

    auto total_current = [&](double v) {
        double acc = 0.0;
        for (const auto& load : bank) acc += load.current(v, dt);
        return acc;
    };

    PeriodTrace trace;
    trace.v_load.resize(n);
    trace.i_total.resize(n);
    double i_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double v_open = open_circuit_voltage(k, cutoff, cfg);
        double v = v_open - rs * i_prev;
        double i = total_current(v);
        bool converged = false;
        for (int it = 0; it < solver.max_iterations; ++it) {
            const double target = v_open - rs * i;
            v += solver.damping * (target - v);
            const double i_next = total_current(v);
            const double change = std::abs(i_next - i);
            i = i_next;
            if (change < solver.tolerance_a) {
                converged = true;
                break;
            }
        }
        if (!converged || !std::isfinite(v) || !std::isfinite(i)) {
            throw NonConvergence("coupled solve failed at sample " + std::to_string(k) +
                                 " (cutoff " + std::to_string(cutoff.value()) + ")");
        }
        for (auto& load : bank) load.advance(v, dt);
        trace.v_load[k] = v;
        trace.i_total[k] = i;
        i_prev = i;
    }
    return trace;
}

}  // namespace plugsense
