#include "gridforge/demand.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "gridforge/parameters.hpp"

namespace gridforge::dem {

namespace {

constexpr double kSecondaryBusShare = 0.01;
constexpr double kInjectMaxM = 50000.0;

std::string resolve_parent(const std::string& code, const ingest::FixtureTables& fixtures) {
    auto it = fixtures.ba_parent.find(code);
    return it == fixtures.ba_parent.end() ? code : it->second;
}

double ba_peak(const std::string& ba, const ingest::FixtureTables& fixtures) {
    auto it = fixtures.ba_demand.find(ba);
    if (it == fixtures.ba_demand.end() || it->second.empty())
        throw std::runtime_error("no demand series for BA " + ba);
    double peak = 0;
    for (const auto& [hour, mw] : it->second) {
        (void)hour;
        peak = std::max(peak, mw);
    }
    if (peak <= 0) throw std::runtime_error("non-positive peak for BA " + ba);
    return peak;
}

double state_peak(const std::string& state, const ingest::FixtureTables& fixtures) {
    auto it = fixtures.state_peaks.find(state);
    if (it == fixtures.state_peaks.end())
        throw std::runtime_error("no state peak for " + state);
    return it->second;
}

}  // namespace

BaAssignment detect_balancing_authorities(topo::NetworkModel& model,
                                          const ingest::FixtureTables& fixtures,
                                          bool multi_state,
                                          Diagnostics& diag) {
    BaAssignment out;

    for (const auto& bus : model.buses) {
        std::string code;
        for (const auto& poly : fixtures.ba_polygons) {
            if (geo::point_in_polygon(bus.loc, poly.poly)) {
                code = poly.code;
                break;
            }
        }
        if (code.empty()) {
            double best = 1e300;
            for (const auto& poly : fixtures.ba_polygons) {
                double d = geo::dist_to_polygon_m(bus.loc, poly.poly);
                if (d < best) {
                    best = d;
                    code = poly.code;
                }
            }
            diag.count("ba.nearest_fallback");
        }
        out.bus_ba[bus.id] = resolve_parent(code, fixtures);
    }

    std::map<std::string, long long> counts;
    for (const auto& [bus, ba] : out.bus_ba) {
        (void)bus;
        ++counts[ba];
    }
    long long best = -1;
    for (const auto& [ba, n] : counts) {
        if (n > best) {
            best = n;
            out.primary = ba;
        }
    }

    std::set<std::string> gen_bas;
    for (const auto& g : model.gens) gen_bas.insert(out.bus_ba.at(g.bus));

    const double total = static_cast<double>(model.buses.size());
    for (const auto& [ba, n] : counts) {
        if (ba == out.primary) continue;
        const double share = n / total;
        if (share > kSecondaryBusShare && gen_bas.count(ba)) {
            out.retained.push_back(ba);
        } else {
            diag.count("ba.secondary_dropped");
            diag.warn("BA " + ba + " dropped (" + std::to_string(n) +
                      " buses); reassigned to " + out.primary);
        }
    }
    out.retained.insert(out.retained.begin(), out.primary);
    std::sort(out.retained.begin() + 1, out.retained.end());

    std::set<std::string> kept(out.retained.begin(), out.retained.end());
    for (auto& [bus, ba] : out.bus_ba) {
        (void)bus;
        if (!kept.count(ba)) ba = out.primary;
    }
    for (auto& bus : model.buses) bus.ba = out.bus_ba.at(bus.id);

    std::map<std::string, long long> final_counts;
    for (const auto& [bus, ba] : out.bus_ba) {
        (void)bus;
        ++final_counts[ba];
    }
    for (const auto& ba : out.retained) out.bus_share[ba] = final_counts[ba] / total;

    if (multi_state)
        out.scope = DemandScope::region;
    else
        out.scope = out.retained.size() > 1 ? DemandScope::multi_ba : DemandScope::single_ba;
    return out;
}

std::map<std::string, double> compute_regional_fractions(
    const BaAssignment& ba, const ingest::FixtureTables& fixtures,
    const std::vector<std::string>& states, double model_capacity_mw,
    const topo::NetworkModel& model, Diagnostics& diag) {
    std::map<std::string, double> out;
    if (states.empty()) throw std::runtime_error("no states given for demand scaling");

    switch (ba.scope) {
        case DemandScope::single_ba: {
            out[ba.primary] = state_peak(states.front(), fixtures) / ba_peak(ba.primary, fixtures);
            break;
        }
        case DemandScope::multi_ba: {
            const double sp = state_peak(states.front(), fixtures);
            const double c_osm = std::min(1.0, model_capacity_mw / sp);
            for (const auto& k : ba.retained)
                out[k] = sp * ba.bus_share.at(k) / ba_peak(k, fixtures) * c_osm;
            break;
        }
        case DemandScope::region: {
            // EIA capacity inside each BA's polygons, for the coverage multiplier
            std::map<std::string, double> eia_cap;
            for (const auto& plant : fixtures.eia860) {
                for (const auto& poly : fixtures.ba_polygons) {
                    if (geo::point_in_polygon(plant.loc, poly.poly)) {
                        eia_cap[resolve_parent(poly.code, fixtures)] += plant.capacity_mw;
                        break;
                    }
                }
            }
            std::map<std::string, double> model_cap;
            for (const auto& g : model.gens) {
                auto it = ba.bus_ba.find(g.bus);
                if (it != ba.bus_ba.end()) model_cap[it->second] += g.p_max_mw;
            }

            for (const auto& k : ba.retained) {
                auto served = fixtures.ba_states.find(k);
                bool single_state_ba = false;
                std::vector<std::string> overlap;
                if (served != fixtures.ba_states.end()) {
                    single_state_ba = served->second.size() == 1;
                    for (const auto& s : states)
                        if (served->second.count(s)) overlap.push_back(s);
                } else {
                    diag.count("ba.states_table_missing");
                    diag.warn("BA " + k + " absent from ba_states; assuming all modeled states");
                    overlap = states;
                }
                if (overlap.empty()) {
                    diag.warn("BA " + k + " serves none of the modeled states; fraction 0");
                    out[k] = 0;
                    continue;
                }
                double peaks = 0;
                for (const auto& s : overlap) peaks += state_peak(s, fixtures);
                double f = peaks / ba_peak(k, fixtures);
                if (!single_state_ba) {
                    double denom = eia_cap.count(k) ? eia_cap.at(k) : 0;
                    double cover = denom > 0 ? std::min(1.0, model_cap[k] / denom) : 1.0;
                    if (denom <= 0) diag.count("ba.no_eia_capacity_in_polygon");
                    f *= cover;
                }
                out[k] = f;
            }
            break;
        }
    }
    return out;
}

LoadSet allocate_loads(const topo::NetworkModel& model, const BaAssignment& ba,
                       const std::map<std::string, double>& fractions,
                       const ingest::FixtureTables& fixtures, int hour_utc,
                       const tables::Tables& tbl, Diagnostics& diag) {
    LoadSet out;
    out.hour_utc = hour_utc;

    // per-BA scaled demand at the requested hour
    std::map<std::string, double> demand;
    for (const auto& k : ba.retained) {
        auto it = fixtures.ba_demand.find(k);
        if (it == fixtures.ba_demand.end())
            throw std::runtime_error("no demand series for BA " + k);
        auto h = it->second.find(hour_utc);
        if (h == it->second.end())
            throw std::runtime_error("BA " + k + " has no demand at hour " +
                                     std::to_string(hour_utc));
        demand[k] = h->second * fractions.at(k);
    }

    // census population per bus (containing tract; nearest tract as fallback)
    std::map<int, double> pop;
    for (const auto& bus : model.buses) {
        const ingest::CensusTract* tract = nullptr;
        for (const auto& t : fixtures.census) {
            if (geo::point_in_polygon(bus.loc, t.poly)) {
                tract = &t;
                break;
            }
        }
        if (!tract) {
            double best = 1e300;
            for (const auto& t : fixtures.census) {
                double d = geo::dist_to_polygon_m(bus.loc, t.poly);
                if (d < best) {
                    best = d;
                    tract = &t;
                }
            }
            diag.count("census.nearest_fallback");
        }
        pop[bus.id] = tract ? tract->population : 0.0;
    }

    const double q_ratio = std::tan(std::acos(tbl.load_power_factor));
    int next_id = 1;
    for (const auto& k : ba.retained) {
        std::vector<const topo::BusRec*> members;
        double pop_sum = 0;
        for (const auto& bus : model.buses) {
            if (ba.bus_ba.at(bus.id) != k) continue;
            members.push_back(&bus);
            pop_sum += pop[bus.id];
        }
        if (members.empty()) continue;
        const bool uniform = pop_sum <= 0;
        if (uniform) {
            diag.count("census.zero_population_partition");
            diag.warn("BA " + k + " has zero tract population; loads spread uniformly");
        }
        for (const auto* bus : members) {
            const double share = uniform ? 1.0 / members.size() : pop[bus->id] / pop_sum;
            const double p = demand[k] * share;
            if (p <= 0) continue;
            topo::LoadRec l;
            l.id = next_id++;
            l.bus = bus->id;
            l.p_mw = p;
            l.q_mvar = p * q_ratio;
            out.total_p_mw += p;
            out.loads.push_back(l);
        }
    }
    return out;
}

void derate_renewables(std::vector<topo::GenRec>& gens, int hour_utc, int month,
                       const tables::Tables& tbl) {
    const int season = tables::season_index(month);
    const int h = ((hour_utc % 24) + 24) % 24;
    for (auto& g : gens) {
        if (g.display_fuel == "Solar")
            g.derated_p_max_mw = g.p_max_mw * tbl.solar_profile[season][h];
        else if (g.display_fuel == "Wind")
            g.derated_p_max_mw = g.p_max_mw * tbl.wind_profile[season][h];
        else
            g.derated_p_max_mw = g.p_max_mw;
    }
}

DispatchPlan merit_order_dispatch(std::vector<topo::GenRec>& gens, double total_load_mw,
                                  const tables::Tables& tbl) {
    DispatchPlan plan;
    plan.gross_demand_mw = total_load_mw * tbl.dispatch_gross_factor;

    std::vector<topo::GenRec*> order;
    for (auto& g : gens) order.push_back(&g);
    std::sort(order.begin(), order.end(), [](const topo::GenRec* a, const topo::GenRec* b) {
        if (a->c1 != b->c1) return a->c1 < b->c1;
        if (a->p_max_mw != b->p_max_mw) return a->p_max_mw > b->p_max_mw;
        return a->id < b->id;
    });

    double remaining = plan.gross_demand_mw;
    for (auto* g : order) {
        const double take = std::min(std::max(g->derated_p_max_mw, 0.0), remaining);
        if (take > 0) {
            g->p_set_mw = take;
            g->committed = true;
            remaining -= take;
            plan.committed_capacity_mw += g->derated_p_max_mw;
            plan.dispatched_mw += take;
        } else {
            g->p_set_mw = 0;
            g->committed = false;
        }
    }
    return plan;
}

InjectionResult inject_eia_generators(topo::NetworkModel& model,
                                      const ingest::FixtureTables& fixtures,
                                      double scaled_demand_mw, int hour_utc, int month,
                                      const tables::Tables& tbl, Diagnostics& diag) {
    InjectionResult res;
    const double target = tbl.reserve_margin * scaled_demand_mw;

    auto derated_total = [&]() {
        double t = 0;
        for (const auto& g : model.gens) t += g.derated_p_max_mw;
        return t;
    };
    if (derated_total() >= target) return res;

    // EIA rows already represented in the model (matched or injected earlier)
    std::set<std::string> used;
    for (const auto& g : model.gens)
        if (!g.eia_name.empty()) used.insert(ingest::normalize_name(g.eia_name));

    std::vector<const ingest::EiaPlant*> candidates;
    for (const auto& plant : fixtures.eia860)
        if (!used.count(ingest::normalize_name(plant.name))) candidates.push_back(&plant);
    std::sort(candidates.begin(), candidates.end(),
              [](const ingest::EiaPlant* a, const ingest::EiaPlant* b) {
                  if (a->capacity_mw != b->capacity_mw) return a->capacity_mw > b->capacity_mw;
                  return a->name < b->name;
              });

    // connection slots per bus: branch degree, minus generators already there
    std::map<int, int> degree, occupancy;
    for (const auto& br : model.branches) {
        ++degree[br.from];
        ++degree[br.to];
    }
    for (const auto& g : model.gens) ++occupancy[g.bus];

    int next_id = 0;
    for (const auto& g : model.gens) next_id = std::max(next_id, g.id);
    ++next_id;

    const int season = tables::season_index(month);
    const int h = ((hour_utc % 24) + 24) % 24;

    for (const auto* plant : candidates) {
        if (derated_total() >= target) break;
        if (plant->capacity_mw <= 0) continue;

        const topo::BusRec* best = nullptr;
        double best_d = 0;
        for (const auto& bus : model.buses) {
            if (occupancy[bus.id] >= std::max(degree[bus.id], 1)) continue;
            double d = geo::haversine_m(plant->loc, bus.loc);
            if (d > kInjectMaxM) continue;
            if (!best || d < best_d - 1e-9) {
                best = &bus;
                best_d = d;
            }
        }
        if (!best) {
            diag.count("inject.no_bus_with_slots");
            continue;
        }

        const std::string technical = par::normalize_fuel_technical(plant->fuel_raw, tbl);
        double heat_rate = 0;
        auto hr = fixtures.eia923_heat_rate.find(ingest::normalize_name(plant->name));
        if (hr != fixtures.eia923_heat_rate.end()) heat_rate = hr->second;
        auto econ = par::generator_costs(technical, plant->capacity_mw, heat_rate,
                                         fixtures.gas_price, tbl);
        auto lim = par::generator_limits(technical, plant->capacity_mw, tbl);

        topo::GenRec g;
        g.id = next_id++;
        g.bus = best->id;
        g.name = plant->name;
        g.technical_fuel = technical;
        g.display_fuel = par::technical_to_display(technical, tbl);
        g.p_max_mw = plant->capacity_mw;
        g.p_min_mw = lim.p_min_mw;
        g.q_min_mvar = lim.q_min_mvar;
        g.q_max_mvar = lim.q_max_mvar;
        g.c1 = econ.c1;
        g.c0 = econ.c0;
        g.startup_usd = econ.startup;
        g.pf = econ.pf;
        g.eia_matched = true;
        g.eia_name = plant->name;
        g.injected = true;
        g.p_set_mw = 0;
        if (g.display_fuel == "Solar")
            g.derated_p_max_mw = g.p_max_mw * tbl.solar_profile[season][h];
        else if (g.display_fuel == "Wind")
            g.derated_p_max_mw = g.p_max_mw * tbl.wind_profile[season][h];
        else
            g.derated_p_max_mw = g.p_max_mw;
        g.plant_id = -(static_cast<long long>(res.injected) + 1);

        ++occupancy[g.bus];
        res.added_capacity_mw += g.p_max_mw;
        ++res.injected;
        model.gens.push_back(std::move(g));
    }

    if (derated_total() < target)
        diag.warn("reserve margin not met after EIA injection: " +
                  std::to_string(derated_total()) + " MW available vs target " +
                  std::to_string(target) + " MW");

    // injected units widen their bus voltage band
    std::set<int> gen_buses;
    for (const auto& g : model.gens) gen_buses.insert(g.bus);
    for (auto& b : model.buses) {
        auto vb = par::bus_voltage_bounds(gen_buses.count(b.id) > 0, tbl);
        b.v_min = vb.v_min;
        b.v_max = vb.v_max;
    }
    return res;
}

void reassign_slack(topo::NetworkModel& model, const tables::Tables& tbl, Diagnostics& diag) {
    const topo::GenRec* best = nullptr;
    for (const auto& g : model.gens) {
        if (!g.committed) continue;
        if (tbl.renewable_display.count(g.display_fuel)) continue;
        if (!best || g.derated_p_max_mw > best->derated_p_max_mw + 1e-9 ||
            (std::abs(g.derated_p_max_mw - best->derated_p_max_mw) <= 1e-9 &&
             g.bus < best->bus))
            best = &g;
    }
    if (best) {
        model.slack_bus = best->bus;
    } else {
        diag.count("slack.no_dispatchable_candidate");
        diag.warn("no committed non-renewable generator; slack bus unchanged");
    }
}

}  // namespace gridforge::dem
