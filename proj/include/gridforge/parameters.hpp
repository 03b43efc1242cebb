#pragma once

#include <string>

#include "gridforge/tables.hpp"

namespace gridforge::par {

struct LineParams {
    double r_pu = 0, x_pu = 0, b_pu = 0;  // on 100 MVA system base
    double rate_mva = 0;                  // includes thermal margin
    double class_kv = 0;                  // LUT row actually used
};

// Per-unit line constants for a section: nearest LUT class by log-ratio,
// Z_pu = Z_ohm * L / (kv^2 / 100), B_pu = B_S * L * Z_base. Throws on
// non-positive length or voltage.
LineParams line_parameters(double kv, double length_km, bool underground,
                           const tables::Tables& tbl);

struct XfmrParams {
    double r_pu = 0, x_pu = 0;   // rebased to 100 MVA system base
    double rate_mva = 0;         // includes thermal margin
    double x_own_pu = 0;         // own-base reactance after any auto reduction
    double auto_factor = 1.0;    // 1.0 when not an autotransformer
    double hv_class = 0, lv_class = 0;
};

// Autotransformer reactance reduction factor: pairs with hv/lv < 3 and both
// sides >= 230 kV get clamp(1 - lv/hv, 0.20, 0.65); others 1.0.
double auto_transformer_factor(double hv_kv, double lv_kv, const tables::Tables& tbl);

XfmrParams transformer_parameters(double hv_kv, double lv_kv, const tables::Tables& tbl);

struct Scaled {
    double r_pu = 0, x_pu = 0, b_pu = 0, rate_mva = 0;
    double n_t = 1, n_c = 1;
};

// Underrepresentation compensation: R,X /= n_t, B *= n_t, MVA *= n_t*n_c,
// with the class row chosen by the keying voltage (transformers: LV side).
// Multi-state runs multiply n_t by 3 and n_c by 2.
Scaled apply_scaling_factors(double key_kv, double r_pu, double x_pu, double b_pu,
                             double rate_mva, bool multi_state, const tables::Tables& tbl);

std::string normalize_fuel_technical(const std::string& raw, const tables::Tables& tbl);
std::string technical_to_display(const std::string& technical, const tables::Tables& tbl);

struct GenEcon {
    double c2 = 0, c1 = 0, c0 = 0, startup = 0;
    double p_min_frac = 0, pf = 0.85;
    bool heat_rate_path = false;  // c1 derived from an EIA-923 heat rate
};

// Cost coefficients for a unit. When heat_rate_btu_per_kwh is positive (from a
// matched EIA-923 record) and the fuel has a heat-rate row, c1 comes from
// heat rate x size factor x fuel price / 1000 + VOM, with gas priced at
// gas_price_usd_mmbtu; otherwise the Table-style defaults apply.
GenEcon generator_costs(const std::string& technical_fuel, double p_max_mw,
                        double heat_rate_btu_per_kwh, double gas_price_usd_mmbtu,
                        const tables::Tables& tbl);

// clamp(1 + 0.05 ln(400/p_max), 0.9, 1.3)
double size_adjustment(double p_max_mw, const tables::Tables& tbl);

struct GenLimits {
    double q_max_mvar = 0, q_min_mvar = 0, p_min_mw = 0;
};

// Q_max = P_max tan(acos(pf)); Q_min = -q_min_frac(display fuel) * Q_max.
GenLimits generator_limits(const std::string& technical_fuel, double p_max_mw,
                           const tables::Tables& tbl);

struct BusVoltageBounds {
    double v_min = 0.95, v_max = 1.05;
};

BusVoltageBounds bus_voltage_bounds(bool has_generator, const tables::Tables& tbl);

// Angle-difference limit by branch type: >= 100 kV lines 30 deg,
// subtransmission 45 deg, transformers 60 deg.
double branch_angle_limit_deg(bool transformer, double voltage_kv, const tables::Tables& tbl);

}  // namespace gridforge::par
