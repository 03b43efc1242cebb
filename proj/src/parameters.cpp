#include "gridforge/parameters.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace gridforge::par {

namespace {

// nearest class by |ln(kv/class)|; ties take the higher class
const tables::LineClass& nearest_line_class(double kv, const std::vector<tables::LineClass>& rows) {
    if (rows.empty()) throw std::runtime_error("empty line LUT");
    const tables::LineClass* best = &rows.front();
    double best_d = std::abs(std::log(kv / best->kv));
    for (const auto& row : rows) {
        double d = std::abs(std::log(kv / row.kv));
        if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && row.kv > best->kv)) {
            best = &row;
            best_d = d;
        }
    }
    return *best;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

LineParams line_parameters(double kv, double length_km, bool underground,
                           const tables::Tables& tbl) {
    if (!(kv > 0)) throw std::runtime_error("line_parameters: non-positive voltage");
    if (!(length_km > 0)) throw std::runtime_error("line_parameters: non-positive length");
    const auto& row = nearest_line_class(kv, underground ? tbl.underground : tbl.overhead);
    const double z_base = kv * kv / 100.0;  // ohm at 100 MVA
    LineParams out;
    out.class_kv = row.kv;
    out.r_pu = row.r_ohm_per_km * length_km / z_base;
    out.x_pu = row.x_ohm_per_km * length_km / z_base;
    out.b_pu = row.b_us_per_km * 1e-6 * length_km * z_base;
    out.rate_mva = row.mva * tbl.thermal_margin;
    return out;
}

double auto_transformer_factor(double hv_kv, double lv_kv, const tables::Tables& tbl) {
    if (lv_kv < tbl.auto_min_kv) return 1.0;
    if (hv_kv / lv_kv >= tbl.auto_ratio_max) return 1.0;
    return std::clamp(1.0 - lv_kv / hv_kv, tbl.auto_factor_min, tbl.auto_factor_max);
}

XfmrParams transformer_parameters(double hv_kv, double lv_kv, const tables::Tables& tbl) {
    if (hv_kv < lv_kv) std::swap(hv_kv, lv_kv);
    if (tbl.xfmr_pairs.empty()) throw std::runtime_error("empty transformer LUT");
    // nearest catalog pair by combined log distance of both windings
    const tables::XfmrPair* best = &tbl.xfmr_pairs.front();
    double best_d = 1e300;
    for (const auto& p : tbl.xfmr_pairs) {
        double d = std::abs(std::log(hv_kv / p.hv)) + std::abs(std::log(lv_kv / p.lv));
        if (d < best_d - 1e-12 ||
            (std::abs(d - best_d) <= 1e-12 && p.hv * p.lv > best->hv * best->lv)) {
            best = &p;
            best_d = d;
        }
    }
    XfmrParams out;
    out.hv_class = best->hv;
    out.lv_class = best->lv;
    out.auto_factor = auto_transformer_factor(hv_kv, lv_kv, tbl);
    out.x_own_pu = best->x_pu * out.auto_factor;
    const double rebase = 100.0 / best->mva;
    out.x_pu = out.x_own_pu * rebase;
    out.r_pu = best->r_pu * rebase;
    out.rate_mva = best->mva * tbl.thermal_margin;
    return out;
}

Scaled apply_scaling_factors(double key_kv, double r_pu, double x_pu, double b_pu,
                             double rate_mva, bool multi_state, const tables::Tables& tbl) {
    const tables::ScaleRow* best = nullptr;
    double best_d = 1e300;
    for (const auto& row : tbl.scaling) {
        double d = std::abs(std::log(key_kv / row.kv));
        if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && best && row.kv > best->kv)) {
            best = &row;
            best_d = d;
        }
    }
    Scaled out;
    out.n_t = best ? best->n_t : 1.0;
    out.n_c = best ? best->n_c : 1.0;
    if (multi_state) {
        out.n_t *= tbl.multi_state_n_t;
        out.n_c *= tbl.multi_state_n_c;
    }
    out.r_pu = r_pu / out.n_t;
    out.x_pu = x_pu / out.n_t;
    out.b_pu = b_pu * out.n_t;
    out.rate_mva = rate_mva * out.n_t * out.n_c;
    return out;
}

std::string normalize_fuel_technical(const std::string& raw, const tables::Tables& tbl) {
    std::string key = lower(raw);
    // multi-valued tags keep the first source
    if (auto pos = key.find(';'); pos != std::string::npos) key = key.substr(0, pos);
    // trim
    auto b = key.find_first_not_of(" \t");
    auto e = key.find_last_not_of(" \t");
    key = b == std::string::npos ? "" : key.substr(b, e - b + 1);
    auto it = tbl.raw_to_technical.find(key);
    return it == tbl.raw_to_technical.end() ? "unknown" : it->second;
}

std::string technical_to_display(const std::string& technical, const tables::Tables& tbl) {
    auto it = tbl.technical_to_display.find(technical);
    return it == tbl.technical_to_display.end() ? "Unknown" : it->second;
}

double size_adjustment(double p_max_mw, const tables::Tables& tbl) {
    if (!(p_max_mw > 0)) return tbl.size_max;
    return std::clamp(1.0 + tbl.size_coeff * std::log(tbl.size_ref_mw / p_max_mw),
                      tbl.size_min, tbl.size_max);
}

GenEcon generator_costs(const std::string& technical_fuel, double p_max_mw,
                        double heat_rate_btu_per_kwh, double gas_price_usd_mmbtu,
                        const tables::Tables& tbl) {
    GenEcon out;
    auto eit = tbl.econ.find(technical_fuel);
    const tables::EconRow& row = eit == tbl.econ.end() ? tbl.unknown_econ : eit->second;
    out.c1 = row.c1;
    out.c0 = row.c0;
    out.startup = row.startup;
    out.p_min_frac = row.p_min_frac;
    out.pf = row.pf;

    auto hit = tbl.heat_rates.find(technical_fuel);
    if (heat_rate_btu_per_kwh > 0 && hit != tbl.heat_rates.end()) {
        const tables::HeatRow& hr = hit->second;
        const bool gas_fired = technical_fuel == "gas" || technical_fuel == "gas_turbine" ||
                               technical_fuel == "gas_steam";
        const double price = gas_fired ? gas_price_usd_mmbtu : hr.fuel_price;
        // the size curve scales the heat rate itself
        const double btu = heat_rate_btu_per_kwh * size_adjustment(p_max_mw, tbl);
        out.c1 = btu * price / 1000.0 + hr.vom;
        out.heat_rate_path = true;
    }
    return out;
}

GenLimits generator_limits(const std::string& technical_fuel, double p_max_mw,
                           const tables::Tables& tbl) {
    auto eit = tbl.econ.find(technical_fuel);
    const double pf = eit == tbl.econ.end() ? tbl.unknown_econ.pf : eit->second.pf;
    const std::string display = technical_to_display(technical_fuel, tbl);
    auto qit = tbl.q_min_frac.find(display);
    const double frac = qit == tbl.q_min_frac.end() ? 0.5 : qit->second;
    GenLimits out;
    out.q_max_mvar = p_max_mw * std::tan(std::acos(pf));
    out.q_min_mvar = -frac * out.q_max_mvar;
    const double p_min_frac = eit == tbl.econ.end() ? tbl.unknown_econ.p_min_frac
                                                    : eit->second.p_min_frac;
    out.p_min_mw = p_min_frac * p_max_mw;
    return out;
}

BusVoltageBounds bus_voltage_bounds(bool has_generator, const tables::Tables& tbl) {
    if (has_generator) return {tbl.v_gen_min, tbl.v_gen_max};
    return {tbl.v_load_min, tbl.v_load_max};
}

double branch_angle_limit_deg(bool transformer, double voltage_kv, const tables::Tables& tbl) {
    if (transformer) return tbl.angle_xfmr_deg;
    if (voltage_kv < tbl.subtx_max_kv) return tbl.angle_subtx_deg;
    return tbl.angle_ehv_deg;
}

}  // namespace gridforge::par
