#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridforge/diagnostics.hpp"
#include "gridforge/ingest.hpp"
#include "gridforge/tables.hpp"
#include "gridforge/topology.hpp"

namespace gridforge::dem {

enum class DemandScope { single_ba, multi_ba, region };

struct BaAssignment {
    std::map<int, std::string> bus_ba;        // bus id -> BA (parents resolved)
    std::string primary;                      // BA with most buses
    std::vector<std::string> retained;        // primary + qualifying secondaries
    std::map<std::string, double> bus_share;  // retained BA -> share of buses
    DemandScope scope = DemandScope::single_ba;
};

// Point-in-polygon BA assignment with nearest-polygon fallback, sub-BA to
// parent mapping, and secondary retention (bus share > 1% and >= 1 generator).
BaAssignment detect_balancing_authorities(topo::NetworkModel& model,
                                          const ingest::FixtureTables& fixtures,
                                          bool multi_state,
                                          Diagnostics& diag);

// State-peak / BA-peak demand fraction per retained BA. model_capacity_mw is
// the OSM-captured generation capacity (before EIA injection).
std::map<std::string, double> compute_regional_fractions(
    const BaAssignment& ba, const ingest::FixtureTables& fixtures,
    const std::vector<std::string>& states, double model_capacity_mw,
    const topo::NetworkModel& model, Diagnostics& diag);

struct LoadSet {
    int hour_utc = 0;
    double total_p_mw = 0;
    std::vector<topo::LoadRec> loads;
};

// Census-population-proportional allocation of each BA partition's scaled
// demand across its buses; Q at the fixed 0.92 load power factor.
LoadSet allocate_loads(const topo::NetworkModel& model, const BaAssignment& ba,
                       const std::map<std::string, double>& fractions,
                       const ingest::FixtureTables& fixtures, int hour_utc,
                       const tables::Tables& tbl, Diagnostics& diag);

// Seasonal-hourly availability derating for solar and wind units; all other
// fuels keep nameplate. Sets derated_p_max_mw on every generator.
void derate_renewables(std::vector<topo::GenRec>& gens, int hour_utc, int month,
                       const tables::Tables& tbl);

struct DispatchPlan {
    double gross_demand_mw = 0;          // 1.03 x total load
    double committed_capacity_mw = 0;    // sum of derated P_max over committed units
    double dispatched_mw = 0;            // sum of p_set
};

// Merit-order dispatch against derated limits: c1 ascending, ties to the
// larger unit then lower id; the marginal unit is partially loaded.
DispatchPlan merit_order_dispatch(std::vector<topo::GenRec>& gens, double total_load_mw,
                                  const tables::Tables& tbl);

struct InjectionResult {
    int injected = 0;
    double added_capacity_mw = 0;
};

// Tops up derated capacity to the 30% reserve margin with unmatched EIA-860
// plants (capacity descending, nearest bus within 50 km, slot budget = branch
// degree). Idempotent once the margin holds.
InjectionResult inject_eia_generators(topo::NetworkModel& model,
                                      const ingest::FixtureTables& fixtures,
                                      double scaled_demand_mw, int hour_utc, int month,
                                      const tables::Tables& tbl, Diagnostics& diag);

// Moves the slack to the committed non-renewable unit with the largest derated
// P_max (ties to the lower bus id); diagnostic when no candidate exists.
void reassign_slack(topo::NetworkModel& model, const tables::Tables& tbl, Diagnostics& diag);

}  // namespace gridforge::dem
