#include <cmath>

#include "doctest.h"
#include "gridforge/parameters.hpp"
#include "gridforge/tables.hpp"

using namespace gridforge;
using namespace gridforge::par;

namespace {
const tables::Tables& tbl() { return tables::load_tables(); }
}

TEST_CASE("line constants reproduce the hand-computed 345 kV case") {
    // 0.370 ohm/km * 100 km on Z_base = 345^2/100 = 1190.25 ohm
    const auto lp = line_parameters(345, 100, false, tbl());
    CHECK(lp.x_pu == doctest::Approx(0.370 * 100 / 1190.25).epsilon(1e-12));
    CHECK(lp.x_pu == doctest::Approx(0.031086).epsilon(1e-4));
    CHECK(lp.r_pu == doctest::Approx(0.020 * 100 / 1190.25).epsilon(1e-12));
    CHECK(lp.b_pu == doctest::Approx(3.50e-6 * 100 * 1190.25).epsilon(1e-12));
    CHECK(lp.rate_mva == doctest::Approx(1000 * 1.10));
    CHECK(lp.class_kv == 345);
}

TEST_CASE("line class selection is nearest by log ratio, ties upward") {
    CHECK(line_parameters(300, 10, false, tbl()).class_kv == 345);
    CHECK(line_parameters(250, 10, false, tbl()).class_kv == 230);
    // exact log midpoint between 230 and 345 resolves to the higher class
    const double mid = std::sqrt(230.0 * 345.0);
    CHECK(line_parameters(mid, 10, false, tbl()).class_kv == 345);
    CHECK(line_parameters(765, 10, false, tbl()).class_kv == 765);
    CHECK(line_parameters(69, 10, false, tbl()).class_kv == 69);
}

TEST_CASE("underground lines use the cable table") {
    const auto lp = line_parameters(138, 10, true, tbl());
    CHECK(lp.x_pu == doctest::Approx(0.105 * 10 / (138.0 * 138.0 / 100.0)).epsilon(1e-12));
    CHECK(lp.rate_mva == doctest::Approx(250 * 1.10));
}

TEST_CASE("line constants reject degenerate inputs") {
    CHECK_THROWS(line_parameters(0, 10, false, tbl()));
    CHECK_THROWS(line_parameters(345, 0, false, tbl()));
    CHECK_THROWS(line_parameters(345, -5, false, tbl()));
}

TEST_CASE("autotransformer factor follows the winding ratio") {
    CHECK(auto_transformer_factor(345, 230, tbl()) == doctest::Approx(1.0 - 230.0 / 345.0));
    CHECK(auto_transformer_factor(345, 230, tbl()) == doctest::Approx(0.33333).epsilon(1e-4));
    CHECK(auto_transformer_factor(500, 230, tbl()) == doctest::Approx(0.54));
    // ratio at or above 3 is a conventional transformer
    CHECK(auto_transformer_factor(765, 230, tbl()) == 1.0);
    // below the 230 kV floor no reduction applies
    CHECK(auto_transformer_factor(230, 138, tbl()) == 1.0);
    // clamp at the low end: 345/300 would give 0.13
    CHECK(auto_transformer_factor(345, 300, tbl()) == doctest::Approx(0.20));
}

TEST_CASE("transformer parameters rebase the catalog pair") {
    const auto xp = transformer_parameters(345, 230, tbl());
    CHECK(xp.hv_class == 345);
    CHECK(xp.lv_class == 230);
    CHECK(xp.auto_factor == doctest::Approx(1.0 - 230.0 / 345.0));
    CHECK(xp.x_own_pu == doctest::Approx(0.08 * (1.0 - 230.0 / 345.0)).epsilon(1e-12));
    CHECK(xp.x_pu == doctest::Approx(xp.x_own_pu * 100.0 / 800.0).epsilon(1e-12));
    CHECK(xp.r_pu == doctest::Approx(0.003 * 100.0 / 800.0).epsilon(1e-12));
    CHECK(xp.rate_mva == doctest::Approx(800 * 1.10));

    // argument order does not matter
    const auto swapped = transformer_parameters(230, 345, tbl());
    CHECK(swapped.x_pu == doctest::Approx(xp.x_pu));

    // 230/69 is closer to the 230/69 pair than to 230/138
    const auto low = transformer_parameters(230, 69, tbl());
    CHECK(low.hv_class == 230);
    CHECK(low.lv_class == 69);
    CHECK(low.auto_factor == 1.0);
}

TEST_CASE("scaling factors divide impedance and multiply capacity") {
    const auto s = apply_scaling_factors(138, 0.04, 0.45, 0.002, 300, false, tbl());
    CHECK(s.n_t == doctest::Approx(1.75));
    CHECK(s.n_c == doctest::Approx(1.0));
    CHECK(s.r_pu == doctest::Approx(0.04 / 1.75));
    CHECK(s.x_pu == doctest::Approx(0.45 / 1.75));
    CHECK(s.b_pu == doctest::Approx(0.002 * 1.75));
    CHECK(s.rate_mva == doctest::Approx(300 * 1.75));

    const auto m = apply_scaling_factors(138, 0.04, 0.45, 0.002, 300, true, tbl());
    CHECK(m.n_t == doctest::Approx(1.75 * 3.0));
    CHECK(m.n_c == doctest::Approx(1.0 * 2.0));
    CHECK(m.rate_mva == doctest::Approx(300 * 1.75 * 3.0 * 2.0));

    const auto ehv = apply_scaling_factors(765, 0.01, 0.1, 0.005, 2400, false, tbl());
    CHECK(ehv.n_t == doctest::Approx(1.0));
    CHECK(ehv.n_c == doctest::Approx(2.0));
}

TEST_CASE("fuel normalization maps raw tags to technical and display names") {
    CHECK(normalize_fuel_technical("gas", tbl()) == "gas");
    CHECK(normalize_fuel_technical("Natural_Gas", tbl()) == "gas");
    CHECK(normalize_fuel_technical("gas;oil", tbl()) == "gas");  // first source wins
    CHECK(normalize_fuel_technical("tidal power", tbl()) == "unknown");
    CHECK(normalize_fuel_technical("", tbl()) == "unknown");
    CHECK(technical_to_display("gas", tbl()) == "Gas");
    CHECK(technical_to_display("gas_turbine", tbl()) == "Gas");
    CHECK(technical_to_display("unknown", tbl()) == "Unknown");
}

TEST_CASE("size adjustment clamps the logarithmic curve") {
    CHECK(size_adjustment(400, tbl()) == doctest::Approx(1.0));
    CHECK(size_adjustment(100, tbl()) == doctest::Approx(1.0 + 0.05 * std::log(4.0)));
    CHECK(size_adjustment(4000, tbl()) == doctest::Approx(0.9));   // floor
    CHECK(size_adjustment(0.1, tbl()) == doctest::Approx(1.3));    // ceiling
}

TEST_CASE("heat-rate path prices fuel through the size-adjusted heat rate") {
    // 6600 BTU/kWh at the 400 MW reference: no size adjustment
    const auto g = generator_costs("gas", 400, 6600, 3.50, tbl());
    CHECK(g.heat_rate_path);
    CHECK(g.c1 == doctest::Approx(6600 * 3.50 / 1000.0 + 3.0).epsilon(1e-12));
    CHECK(g.c1 == doctest::Approx(26.1).epsilon(1e-6));

    // the gas price fixture overrides only gas-fired fuels
    const auto pricey = generator_costs("gas", 400, 6600, 4.25, tbl());
    CHECK(pricey.c1 == doctest::Approx(6600 * 4.25 / 1000.0 + 3.0));
    const auto coal = generator_costs("coal", 400, 9800, 4.25, tbl());
    CHECK(coal.c1 == doctest::Approx(9800 * 2.50 / 1000.0 + 5.0));

    // smaller units burn more per MWh
    const auto small = generator_costs("gas", 100, 6600, 3.50, tbl());
    CHECK(small.c1 == doctest::Approx(6600 * (1 + 0.05 * std::log(4.0)) * 3.50 / 1000.0 + 3.0));
}

TEST_CASE("table-default costs apply without a heat rate") {
    const auto g = generator_costs("gas", 400, 0, 3.50, tbl());
    CHECK(!g.heat_rate_path);
    CHECK(g.c1 == doctest::Approx(26.0));
    CHECK(g.c0 == doctest::Approx(20.0));
    CHECK(g.p_min_frac == doctest::Approx(0.20));

    const auto u = generator_costs("antimatter", 400, 0, 3.50, tbl());
    CHECK(u.c1 == doctest::Approx(50.0));

    // solar has no heat-rate row, so a bogus heat rate cannot reprice it
    const auto s = generator_costs("solar", 400, 9000, 3.50, tbl());
    CHECK(!s.heat_rate_path);
    CHECK(s.c1 == doctest::Approx(0.0));
}

TEST_CASE("reactive capability from the power factor triangle") {
    const auto gl = generator_limits("gas", 100, tbl());
    CHECK(gl.q_max_mvar == doctest::Approx(100 * std::tan(std::acos(0.85))).epsilon(1e-12));
    CHECK(gl.q_max_mvar / 100.0 == doctest::Approx(0.6197).epsilon(1e-4));
    CHECK(gl.q_min_mvar == doctest::Approx(-0.5 * gl.q_max_mvar));
    CHECK(gl.p_min_mw == doctest::Approx(20.0));

    // solar inverters are symmetric
    const auto sl = generator_limits("solar", 100, tbl());
    CHECK(sl.q_min_mvar == doctest::Approx(-sl.q_max_mvar));
    CHECK(sl.p_min_mw == 0.0);

    const auto nl = generator_limits("nuclear", 1000, tbl());
    CHECK(nl.p_min_mw == doctest::Approx(500.0));
    CHECK(nl.q_max_mvar == doctest::Approx(1000 * std::tan(std::acos(0.90))));
}

TEST_CASE("voltage bounds and angle limits by equipment class") {
    const auto gen_b = bus_voltage_bounds(true, tbl());
    CHECK(gen_b.v_min == doctest::Approx(0.95));
    CHECK(gen_b.v_max == doctest::Approx(1.10));
    const auto load_b = bus_voltage_bounds(false, tbl());
    CHECK(load_b.v_max == doctest::Approx(1.05));

    CHECK(branch_angle_limit_deg(false, 345, tbl()) == doctest::Approx(30));
    CHECK(branch_angle_limit_deg(false, 69, tbl()) == doctest::Approx(45));
    CHECK(branch_angle_limit_deg(false, 100, tbl()) == doctest::Approx(30));
    CHECK(branch_angle_limit_deg(true, 345, tbl()) == doctest::Approx(60));
}
