#include "gridforge/tables.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

#include "json.hpp"

namespace gridforge::tables {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed data file " + path + ": " + e.what());
    }
    return j;
}

std::array<double, 24> hours24(const json& arr, const std::string& what) {
    if (!arr.is_array() || arr.size() != 24)
        throw std::runtime_error("profile " + what + " must have 24 entries");
    std::array<double, 24> out{};
    for (int h = 0; h < 24; ++h) out[h] = arr[h].get<double>();
    return out;
}

LadderRow parse_ladder_row(const json& j) {
    LadderRow r;
    r.level = j.value("level", "");
    r.angle_deg = j.value("angle_deg", 0.0);
    r.thermal_mult = j.value("thermal_mult", 1.0);
    r.v_min = j.value("v_min", 0.0);
    r.v_max = j.value("v_max", 0.0);
    r.q_mult = j.value("q_mult", 1.0);
    r.load_cap = j.value("load_cap", 0.0);
    r.pmin_mult = j.value("pmin_mult", 1.0);
    return r;
}

Tables load_from(const std::string& dir) {
    Tables t;

    json lines = read_json(dir + "/line_lut.json");
    t.thermal_margin = lines.at("thermal_margin").get<double>();
    for (const auto& row : lines.at("overhead"))
        t.overhead.push_back({row.at("kv"), row.at("r_ohm_per_km"), row.at("x_ohm_per_km"),
                              row.at("b_us_per_km"), row.at("mva")});
    for (const auto& row : lines.at("underground"))
        t.underground.push_back({row.at("kv"), row.at("r_ohm_per_km"), row.at("x_ohm_per_km"),
                                 row.at("b_us_per_km"), row.at("mva")});

    json xf = read_json(dir + "/transformer_lut.json");
    t.auto_ratio_max = xf.at("auto_ratio_max");
    t.auto_min_kv = xf.at("auto_min_kv");
    t.auto_factor_min = xf.at("auto_factor_min");
    t.auto_factor_max = xf.at("auto_factor_max");
    for (const auto& row : xf.at("pairs"))
        t.xfmr_pairs.push_back(
            {row.at("hv"), row.at("lv"), row.at("x_pu"), row.at("r_pu"), row.at("mva")});

    json sc = read_json(dir + "/scaling_factors.json");
    t.multi_state_n_t = sc.at("multi_state_n_t");
    t.multi_state_n_c = sc.at("multi_state_n_c");
    for (const auto& row : sc.at("classes"))
        t.scaling.push_back({row.at("kv"), row.at("n_t"), row.at("n_c")});

    json ec = read_json(dir + "/generator_econ.json");
    t.default_gas_price = ec.at("default_gas_price_usd_mmbtu");
    t.size_ref_mw = ec.at("size_ref_mw");
    t.size_coeff = ec.at("size_coeff");
    t.size_min = ec.at("size_min");
    t.size_max = ec.at("size_max");
    auto parse_econ = [](const json& j) {
        return EconRow{j.at("c1"), j.at("c0"), j.at("startup"), j.at("p_min_frac"), j.at("pf")};
    };
    t.unknown_econ = parse_econ(ec.at("unknown"));
    for (auto it = ec.at("rows").begin(); it != ec.at("rows").end(); ++it)
        t.econ[it.key()] = parse_econ(it.value());
    for (auto it = ec.at("heat_rates").begin(); it != ec.at("heat_rates").end(); ++it)
        t.heat_rates[it.key()] =
            HeatRow{it.value().at("btu_per_kwh"), it.value().at("fuel_price"), it.value().at("vom")};
    for (auto it = ec.at("q_min_frac").begin(); it != ec.at("q_min_frac").end(); ++it)
        t.q_min_frac[it.key()] = it.value().get<double>();

    json fm = read_json(dir + "/fuel_map.json");
    for (auto it = fm.at("raw_to_technical").begin(); it != fm.at("raw_to_technical").end(); ++it)
        t.raw_to_technical[it.key()] = it.value().get<std::string>();
    for (auto it = fm.at("technical_to_display").begin(); it != fm.at("technical_to_display").end();
         ++it)
        t.technical_to_display[it.key()] = it.value().get<std::string>();
    for (const auto& s : fm.at("renewable_display")) t.renewable_display.insert(s.get<std::string>());
    for (const auto& s : fm.at("zero_marginal_display"))
        t.zero_marginal_display.insert(s.get<std::string>());

    json pf = read_json(dir + "/renewable_profiles.json");
    const char* seasons[3] = {"summer", "winter", "shoulder"};
    for (int s = 0; s < 3; ++s) {
        t.solar_profile[s] = hours24(pf.at("solar").at(seasons[s]), seasons[s]);
        t.wind_profile[s] = hours24(pf.at("wind").at(seasons[s]), seasons[s]);
    }

    json hv = read_json(dir + "/hvdc_config.json");
    for (const auto& s : hv.at("known_projects")) t.hvdc_projects.push_back(s.get<std::string>());
    for (const auto& row : hv.at("p_max_classes"))
        t.dc_pmax_classes.push_back({row.at("min_kv"), row.at("p_max_mw")});
    t.dc_q_frac = hv.at("q_frac");
    t.dc_loss0_mw = hv.at("loss0_mw");
    t.dc_loss1 = hv.at("loss1");
    t.converter_radius_m = hv.at("converter_radius_m");
    t.cable_signal_min_kv = hv.at("cable_signal_min_kv");

    json op = read_json(dir + "/opf_defaults.json");
    t.angle_ehv_deg = op.at("angle_limit_ehv_deg");
    t.angle_subtx_deg = op.at("angle_limit_subtx_deg");
    t.angle_xfmr_deg = op.at("angle_limit_xfmr_deg");
    t.subtx_max_kv = op.at("subtx_max_kv");
    t.v_load_min = op.at("v_load_min");
    t.v_load_max = op.at("v_load_max");
    t.v_gen_min = op.at("v_gen_min");
    t.v_gen_max = op.at("v_gen_max");
    t.load_power_factor = op.at("load_power_factor");
    t.dispatch_gross_factor = op.at("dispatch_gross_factor");
    t.reserve_margin = op.at("reserve_margin");
    t.shunt_margin = op.at("shunt_margin");
    t.shed_penalty_usd_mwh = op.at("shed_penalty_usd_mwh");
    t.thermal_unlimited = op.at("thermal_unlimited");
    t.tol_locally_solved = op.at("tol_locally_solved");
    t.tol_almost_solved = op.at("tol_almost_solved");
    t.max_iterations = op.at("max_iterations");
    t.attempt_timeout_s = op.at("attempt_timeout_s");
    for (const auto& row : op.at("ladder")) t.ladder.push_back(parse_ladder_row(row));
    if (t.ladder.size() != 6) throw std::runtime_error("ladder must have 6 levels");
    t.ac1 = parse_ladder_row(op.at("ac1"));

    return t;
}

}  // namespace

std::string default_data_dir() {
    if (const char* env = std::getenv("GRIDFORGE_DATA"); env && *env) return env;
#ifdef GRIDFORGE_DATA_DIR
    return GRIDFORGE_DATA_DIR;
#else
    return "data";
#endif
}

const Tables& load_tables(const std::string& data_dir) {
    static std::mutex mu;
    static std::map<std::string, Tables> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(data_dir);
    if (it == cache.end()) it = cache.emplace(data_dir, load_from(data_dir)).first;
    return it->second;
}

int season_index(int month) {
    if (month >= 6 && month <= 8) return 0;
    if (month == 12 || month <= 2) return 1;
    return 2;
}

}  // namespace gridforge::tables
