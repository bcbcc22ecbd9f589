#include "catch_amalgamated.hpp"

#include <vector>

#include <plugsense/probe.hpp>

using namespace plugsense;
using Catch::Approx;

namespace {

LoadInstance resistor(double watts, const SupplyConfig& cfg) {
    ClassSpec spec{ModelFamily::resistive, {ParamSet{{"power_w", watts}}}, {}};
    return nominal_instance(LoadClass::hairdryer, spec, 0, cfg);
}

}  // namespace

TEST_CASE("default schedule") {
    const DimmingSchedule s;
    REQUIRE(s.ratios.size() == kRows);
    CHECK(s.ratios.front() == Approx(0.10));
    CHECK(s.ratios.back() == Approx(0.75));
    CHECK(s.total_periods() == 14 * 25);
    DimmingSchedule bad;
    bad.ratios[3] = bad.ratios[2];
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("resistor: apparent equals real power and follows the closed form") {
    SupplyConfig cfg;
    cfg.source_resistance = 0.0;
    std::vector<LoadInstance> bank{resistor(100.0, cfg)};
    const auto m = run_probe(bank, cfg, DimmingSchedule{});
    REQUIRE_NOTHROW(m.validate());
    const DimmingSchedule sched;
    const double r = cfg.nominal_rms_voltage * cfg.nominal_rms_voltage / 100.0;
    for (std::size_t row = 0; row < kRows; ++row) {
        const double v = phase_cut_rms(cfg.peak_voltage(), CutoffRatio{sched.ratios[row]});
        for (std::size_t c = 0; c < kCols; ++c) {
            CHECK(m.v_rms(row, c) * m.i_rms(row, c) == Approx(m.real_power(row, c)).epsilon(1e-9));
            CHECK(m.real_power(row, c) == Approx(v * v / r).epsilon(1e-3));
        }
    }
}

TEST_CASE("more cut means less power") {
    SupplyConfig cfg;
    const auto table = default_class_table();
    std::vector<LoadInstance> bank{nominal_instance(LoadClass::INCANDESCENTS, table[index_of(LoadClass::INCANDESCENTS)], 0, cfg)};
    const auto m = run_probe(bank, cfg, DimmingSchedule{});
    for (std::size_t row = 1; row < kRows; ++row) CHECK(m.real_power(row, 0) < m.real_power(row - 1, 0));
}

TEST_CASE("filament cools over the cut periods of a row") {
    SupplyConfig cfg;
    const auto table = default_class_table();
    std::vector<LoadInstance> bank{nominal_instance(LoadClass::INCANDESCENTS, table[index_of(LoadClass::INCANDESCENTS)], 0, cfg)};
    const auto m = run_probe(bank, cfg, DimmingSchedule{});
    // A cooler filament has lower resistance, so current rises along a row.
    CHECK(m.i_rms(kRows - 1, kCols - 1) > m.i_rms(kRows - 1, 0));
}

TEST_CASE("features are scaled power channels") {
    SupplyConfig cfg;
    std::vector<LoadInstance> bank{resistor(200.0, cfg)};
    const auto m = run_probe(bank, cfg, DimmingSchedule{});
    const auto f = features(m, FeatureScale{100.0, 50.0});
    CHECK(f.real_power()[17] == Approx(m.real_power.cells[17] / 100.0));
    CHECK(f.apparent_power()[17] == Approx(m.v_rms.cells[17] * m.i_rms.cells[17] / 50.0));
    CHECK_THROWS_AS(features(m, FeatureScale{0.0, 1.0}), InvalidArgument);
}

TEST_CASE("default feature scale is the largest nominal apparent power") {
    const SupplyConfig cfg;
    const double s = max_nominal_apparent_power(default_class_table(), cfg);
    // The 1200 W dryer dominates, less the droop across the source resistance.
    CHECK(s > 1100.0);
    CHECK(s < 1200.0);
}

TEST_CASE("matrix validation flags bad cells") {
    MeasurementMatrices m;
    CHECK_NOTHROW(m.validate());
    m.real_power.cells[4] = -1.0;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.real_power.cells[4] = 0.0;
    m.v_rms.cells[9] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
}

TEST_CASE("probing an empty bank fails") {
    std::vector<LoadInstance> bank;
    CHECK_THROWS_AS(run_probe(bank, SupplyConfig{}, DimmingSchedule{}), InvalidArgument);
}
