#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace gridforge::tables {

struct LineClass {
    double kv = 0, r_ohm_per_km = 0, x_ohm_per_km = 0, b_us_per_km = 0, mva = 0;
};

struct XfmrPair {
    double hv = 0, lv = 0, x_pu = 0, r_pu = 0, mva = 0;
};

struct ScaleRow {
    double kv = 0, n_t = 1, n_c = 1;
};

struct EconRow {
    double c1 = 0, c0 = 0, startup = 0, p_min_frac = 0, pf = 0.85;
};

struct HeatRow {
    double btu_per_kwh = 0, fuel_price = 0, vom = 0;
};

struct LadderRow {
    std::string level;
    double angle_deg = 0;      // 0 keeps per-class defaults
    double thermal_mult = 1.0; // >= thermal_unlimited marks removal
    double v_min = 0, v_max = 0;  // 0 keeps per-class defaults
    double q_mult = 1.0;
    double load_cap = 0;       // 0 disables shedding
    double pmin_mult = 1.0;
};

struct DcPmaxClass {
    double min_kv = 0, p_max_mw = 0;
};

// All shipped lookup data, loaded once per data directory.
struct Tables {
    // line_lut.json
    double thermal_margin = 1.10;
    std::vector<LineClass> overhead, underground;

    // transformer_lut.json
    double auto_ratio_max = 3.0, auto_min_kv = 230.0;
    double auto_factor_min = 0.20, auto_factor_max = 0.65;
    std::vector<XfmrPair> xfmr_pairs;

    // scaling_factors.json
    double multi_state_n_t = 3.0, multi_state_n_c = 2.0;
    std::vector<ScaleRow> scaling;

    // generator_econ.json
    double default_gas_price = 3.50;
    double size_ref_mw = 400.0, size_coeff = 0.05, size_min = 0.9, size_max = 1.3;
    std::map<std::string, EconRow> econ;        // by technical fuel
    EconRow unknown_econ;
    std::map<std::string, HeatRow> heat_rates;  // by technical fuel
    std::map<std::string, double> q_min_frac;   // by display fuel

    // fuel_map.json
    std::map<std::string, std::string> raw_to_technical;
    std::map<std::string, std::string> technical_to_display;
    std::set<std::string> renewable_display, zero_marginal_display;

    // renewable_profiles.json: [season][hour], season 0 summer / 1 winter / 2 shoulder
    std::array<std::array<double, 24>, 3> solar_profile{}, wind_profile{};

    // hvdc_config.json
    std::vector<std::string> hvdc_projects;
    std::vector<DcPmaxClass> dc_pmax_classes;
    double dc_q_frac = 0.3, dc_loss0_mw = 0.0, dc_loss1 = 0.01;
    double converter_radius_m = 500.0, cable_signal_min_kv = 100.0;

    // opf_defaults.json
    double angle_ehv_deg = 30, angle_subtx_deg = 45, angle_xfmr_deg = 60;
    double subtx_max_kv = 100;
    double v_load_min = 0.95, v_load_max = 1.05, v_gen_min = 0.95, v_gen_max = 1.10;
    double load_power_factor = 0.92;
    double dispatch_gross_factor = 1.03;
    double reserve_margin = 1.30;
    double shunt_margin = 0.15;
    double shed_penalty_usd_mwh = 10000.0;
    double thermal_unlimited = 1e6;
    double tol_locally_solved = 1e-4, tol_almost_solved = 1e-2;
    int max_iterations = 10000;
    double attempt_timeout_s = 1800.0;
    std::vector<LadderRow> ladder;
    LadderRow ac1;
};

// Path baked at build time, overridable with the GRIDFORGE_DATA env var.
std::string default_data_dir();

// Loads (and caches) all table files from data_dir. Throws std::runtime_error
// on missing files or malformed content.
const Tables& load_tables(const std::string& data_dir = default_data_dir());

int season_index(int month);  // 0 summer (Jun-Aug), 1 winter (Dec-Feb), 2 shoulder

}  // namespace gridforge::tables
