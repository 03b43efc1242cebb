#include "gridforge/model_io.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace gridforge::io {

namespace {

using nlohmann::json;

void write_file(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed on " + path);
}

json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return doc;
}

}  // namespace

void write_model_json(const topo::NetworkModel& model, const std::string& path) {
    json doc;
    doc["baseMVA"] = model.base_mva;
    doc["multi_state"] = model.multi_state;
    doc["slack_bus"] = model.slack_bus;

    json buses = json::array();
    for (const topo::BusRec& b : model.buses) {
        buses.push_back({{"id", b.id},
                         {"name", b.name},
                         {"lat", b.loc.lat},
                         {"lon", b.loc.lon},
                         {"base_kv", b.base_kv},
                         {"facility", b.facility},
                         {"ba", b.ba},
                         {"v_min", b.v_min},
                         {"v_max", b.v_max}});
    }
    doc["bus"] = std::move(buses);

    json branches = json::array();
    for (const topo::BranchRec& br : model.branches) {
        branches.push_back({{"id", br.id},
                            {"from", br.from},
                            {"to", br.to},
                            {"kind", br.kind == topo::BranchKind::transformer ? "transformer"
                                                                              : "line"},
                            {"r_pu", br.r_pu},
                            {"x_pu", br.x_pu},
                            {"b_pu", br.b_pu},
                            {"rate_mva", br.rate_mva},
                            {"angle_limit_deg", br.angle_limit_deg},
                            {"length_km", br.length_km},
                            {"voltage_kv", br.voltage_kv},
                            {"circuit", br.circuit}});
    }
    doc["branch"] = std::move(branches);

    json gens = json::array(), gencost = json::array();
    for (const topo::GenRec& g : model.gens) {
        gens.push_back({{"id", g.id},
                        {"bus", g.bus},
                        {"name", g.name},
                        {"technical_fuel", g.technical_fuel},
                        {"display_fuel", g.display_fuel},
                        {"p_max_mw", g.p_max_mw},
                        {"p_min_mw", g.p_min_mw},
                        {"q_min_mvar", g.q_min_mvar},
                        {"q_max_mvar", g.q_max_mvar},
                        {"pf", g.pf},
                        {"eia_matched", g.eia_matched},
                        {"eia_name", g.eia_name},
                        {"injected", g.injected},
                        {"p_set_mw", g.p_set_mw},
                        {"committed", g.committed},
                        {"derated_p_max_mw", g.derated_p_max_mw},
                        {"plant_id", g.plant_id}});
        gencost.push_back({{"gen", g.id},
                           {"c2", g.c2},
                           {"c1", g.c1},
                           {"c0", g.c0},
                           {"startup_usd", g.startup_usd}});
    }
    doc["gen"] = std::move(gens);
    doc["gencost"] = std::move(gencost);

    json loads = json::array();
    for (const topo::LoadRec& l : model.loads)
        loads.push_back({{"id", l.id}, {"bus", l.bus}, {"p_mw", l.p_mw}, {"q_mvar", l.q_mvar}});
    doc["load"] = std::move(loads);

    json shunts = json::array();
    for (const topo::ShuntRec& s : model.shunts)
        shunts.push_back({{"id", s.id}, {"bus", s.bus}, {"bs_mvar", s.bs_mvar}});
    doc["shunt"] = std::move(shunts);

    json dclines = json::array();
    for (const topo::DcLinkRec& d : model.dclinks) {
        dclines.push_back({{"id", d.id},
                           {"from", d.from},
                           {"to", d.to},
                           {"p_max_mw", d.p_max_mw},
                           {"loss0_mw", d.loss0_mw},
                           {"loss1", d.loss1},
                           {"q_min_f", d.q_min_f},
                           {"q_max_f", d.q_max_f},
                           {"q_min_t", d.q_min_t},
                           {"q_max_t", d.q_max_t},
                           {"name", d.name}});
    }
    doc["dcline"] = std::move(dclines);

    write_file(doc, path);
}

topo::NetworkModel read_model_json(const std::string& path) {
    const json doc = read_file(path);
    topo::NetworkModel model;
    try {
        model.base_mva = doc.at("baseMVA").get<double>();
        model.multi_state = doc.value("multi_state", false);
        model.slack_bus = doc.at("slack_bus").get<int>();
        for (const json& b : doc.at("bus")) {
            topo::BusRec rec;
            rec.id = b.at("id").get<int>();
            rec.name = b.value("name", std::string());
            rec.loc.lat = b.at("lat").get<double>();
            rec.loc.lon = b.at("lon").get<double>();
            rec.base_kv = b.at("base_kv").get<double>();
            rec.facility = b.value("facility", -1);
            rec.ba = b.value("ba", std::string());
            rec.v_min = b.at("v_min").get<double>();
            rec.v_max = b.at("v_max").get<double>();
            model.buses.push_back(rec);
        }
        for (const json& br : doc.at("branch")) {
            topo::BranchRec rec;
            rec.id = br.at("id").get<int>();
            rec.from = br.at("from").get<int>();
            rec.to = br.at("to").get<int>();
            rec.kind = br.at("kind").get<std::string>() == "transformer"
                           ? topo::BranchKind::transformer
                           : topo::BranchKind::line;
            rec.r_pu = br.at("r_pu").get<double>();
            rec.x_pu = br.at("x_pu").get<double>();
            rec.b_pu = br.at("b_pu").get<double>();
            rec.rate_mva = br.at("rate_mva").get<double>();
            rec.angle_limit_deg = br.at("angle_limit_deg").get<double>();
            rec.length_km = br.value("length_km", 0.0);
            rec.voltage_kv = br.value("voltage_kv", 0.0);
            rec.circuit = br.value("circuit", -1);
            model.branches.push_back(rec);
        }
        std::map<int, json> costs;
        if (doc.contains("gencost"))
            for (const json& c : doc.at("gencost")) costs[c.at("gen").get<int>()] = c;
        for (const json& g : doc.at("gen")) {
            topo::GenRec rec;
            rec.id = g.at("id").get<int>();
            rec.bus = g.at("bus").get<int>();
            rec.name = g.value("name", std::string());
            rec.technical_fuel = g.value("technical_fuel", std::string("unknown"));
            rec.display_fuel = g.value("display_fuel", std::string("Unknown"));
            rec.p_max_mw = g.at("p_max_mw").get<double>();
            rec.p_min_mw = g.at("p_min_mw").get<double>();
            rec.q_min_mvar = g.at("q_min_mvar").get<double>();
            rec.q_max_mvar = g.at("q_max_mvar").get<double>();
            rec.pf = g.value("pf", 0.9);
            rec.eia_matched = g.value("eia_matched", false);
            rec.eia_name = g.value("eia_name", std::string());
            rec.injected = g.value("injected", false);
            rec.p_set_mw = g.value("p_set_mw", 0.0);
            rec.committed = g.value("committed", false);
            rec.derated_p_max_mw = g.value("derated_p_max_mw", rec.p_max_mw);
            rec.plant_id = g.value("plant_id", -1);
            if (auto it = costs.find(rec.id); it != costs.end()) {
                rec.c2 = it->second.value("c2", 0.0);
                rec.c1 = it->second.value("c1", 0.0);
                rec.c0 = it->second.value("c0", 0.0);
                rec.startup_usd = it->second.value("startup_usd", 0.0);
            }
            model.gens.push_back(rec);
        }
        for (const json& l : doc.at("load")) {
            topo::LoadRec rec;
            rec.id = l.at("id").get<int>();
            rec.bus = l.at("bus").get<int>();
            rec.p_mw = l.at("p_mw").get<double>();
            rec.q_mvar = l.at("q_mvar").get<double>();
            model.loads.push_back(rec);
        }
        if (doc.contains("shunt"))
            for (const json& s : doc.at("shunt")) {
                topo::ShuntRec rec;
                rec.id = s.at("id").get<int>();
                rec.bus = s.at("bus").get<int>();
                rec.bs_mvar = s.at("bs_mvar").get<double>();
                model.shunts.push_back(rec);
            }
        if (doc.contains("dcline"))
            for (const json& d : doc.at("dcline")) {
                topo::DcLinkRec rec;
                rec.id = d.at("id").get<int>();
                rec.from = d.at("from").get<int>();
                rec.to = d.at("to").get<int>();
                rec.p_max_mw = d.at("p_max_mw").get<double>();
                rec.loss0_mw = d.value("loss0_mw", 0.0);
                rec.loss1 = d.value("loss1", 0.0);
                rec.q_min_f = d.value("q_min_f", 0.0);
                rec.q_max_f = d.value("q_max_f", 0.0);
                rec.q_min_t = d.value("q_min_t", 0.0);
                rec.q_max_t = d.value("q_max_t", 0.0);
                rec.name = d.value("name", std::string());
                model.dclinks.push_back(rec);
            }
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }

    // validation
    if (model.base_mva <= 0) throw std::runtime_error(path + ": baseMVA must be positive");
    if (model.gens.empty()) throw std::runtime_error(path + ": model has no generators");
    std::set<int> bus_ids;
    for (const topo::BusRec& b : model.buses)
        if (!bus_ids.insert(b.id).second)
            throw std::runtime_error(path + ": duplicate bus id " + std::to_string(b.id));
    if (!bus_ids.count(model.slack_bus))
        throw std::runtime_error(path + ": slack bus not in bus table");
    for (const topo::BranchRec& br : model.branches) {
        if (!bus_ids.count(br.from) || !bus_ids.count(br.to))
            throw std::runtime_error(path + ": branch " + std::to_string(br.id) +
                                     " references unknown bus");
        if (br.x_pu <= 0)
            throw std::runtime_error(path + ": branch " + std::to_string(br.id) +
                                     " has non-positive reactance");
    }
    for (const topo::GenRec& g : model.gens)
        if (!bus_ids.count(g.bus))
            throw std::runtime_error(path + ": generator " + std::to_string(g.id) +
                                     " references unknown bus");
    for (const topo::LoadRec& l : model.loads)
        if (!bus_ids.count(l.bus))
            throw std::runtime_error(path + ": load " + std::to_string(l.id) +
                                     " references unknown bus");
    for (const topo::ShuntRec& s : model.shunts)
        if (!bus_ids.count(s.bus))
            throw std::runtime_error(path + ": shunt " + std::to_string(s.id) +
                                     " references unknown bus");
    for (const topo::DcLinkRec& d : model.dclinks)
        if (!bus_ids.count(d.from) || !bus_ids.count(d.to))
            throw std::runtime_error(path + ": dcline " + std::to_string(d.id) +
                                     " references unknown bus");
    return model;
}

namespace {

json solution_to_json(const opf::OpfSolution& sol) {
    json s;
    s["status"] = opf::to_string(sol.status);
    s["formulation"] = sol.formulation;
    s["level"] = sol.level;
    s["ac1"] = sol.ac1;
    s["objective_usd"] = sol.objective_usd;
    s["va_rad"] = sol.va;
    s["vm_pu"] = sol.vm;
    s["pg_pu"] = sol.pg;
    s["qg_pu"] = sol.qg;
    json flows = json::array();
    for (const opf::BranchFlow& f : sol.flows) {
        flows.push_back({{"id", f.id},
                         {"p_from", f.p_from},
                         {"q_from", f.q_from},
                         {"p_to", f.p_to},
                         {"q_to", f.q_to}});
    }
    s["branch_flows"] = std::move(flows);
    s["dc_flow_pu"] = sol.dc_flow;
    s["served_pu"] = sol.served;
    s["total_loss_pu"] = sol.total_loss_pu;
    s["loss_pct"] = sol.loss_pct;
    s["served_mw"] = sol.served_mw;
    s["shed_mw"] = sol.shed_mw;
    s["iterations"] = sol.iterations;
    s["solve_seconds"] = 0.0;  // zeroed so artifacts stay byte-identical
    s["kkt_residual"] = sol.kkt_residual;
    return s;
}

}  // namespace

void write_solution_json(const topo::NetworkModel& model, const opf::OpfSolution& sol,
                         const std::vector<opf::AttemptRecord>& attempts,
                         const std::string& path) {
    json doc = solution_to_json(sol);
    doc["baseMVA"] = model.base_mva;
    json att = json::array();
    for (const opf::AttemptRecord& a : attempts) {
        att.push_back({{"formulation", a.formulation},
                       {"level", a.level},
                       {"ac1", a.ac1},
                       {"status", opf::to_string(a.status)},
                       {"objective_usd", a.objective_usd},
                       {"iterations", a.iterations},
                       {"solve_seconds", 0.0}});
    }
    doc["attempts"] = std::move(att);
    write_file(doc, path);
}

void write_report_json(const ReportInputs& rep, const std::string& path) {
    json doc;
    json funnel;
    funnel["sections_input"] = rep.stats.sections_input;
    funnel["sections_tagged"] = rep.stats.sections_tagged;
    funnel["sections_inferred"] = rep.stats.sections_inferred;
    funnel["sections_unresolved"] = rep.stats.sections_unresolved;
    funnel["sections_retained"] = rep.stats.sections_retained;
    funnel["circuits_resolved"] = rep.stats.circuits_resolved;
    funnel["merged_groups"] = rep.stats.merged_groups;
    funnel["class_counts"] = rep.stats.class_counts;
    funnel["buses_created"] = rep.stats.buses_created;
    funnel["transformers_inferred"] = rep.stats.transformers_inferred;
    funnel["branch_conversions"] = rep.stats.branch_conversions;
    funnel["generators_assigned"] = rep.stats.generators_assigned;
    funnel["generators_dropped"] = rep.stats.generators_dropped;
    funnel["dclinks_created"] = rep.stats.dclinks_created;
    funnel["bridging_transformers"] = rep.stats.bridging_transformers;
    funnel["isolated_buses_removed"] = rep.stats.isolated_buses_removed;
    funnel["genfree_component_buses_removed"] = rep.stats.genfree_component_buses_removed;
    funnel["offmain_component_buses_removed"] = rep.stats.offmain_component_buses_removed;
    funnel["final_buses"] = rep.stats.final_buses;
    funnel["final_branches"] = rep.stats.final_branches;
    funnel["final_generators"] = rep.stats.final_generators;
    doc["topology"] = std::move(funnel);

    json ba;
    ba["primary"] = rep.ba.primary;
    ba["retained"] = rep.ba.retained;
    ba["bus_share"] = rep.ba.bus_share;
    switch (rep.ba.scope) {
        case dem::DemandScope::single_ba: ba["scope"] = "single_ba"; break;
        case dem::DemandScope::multi_ba: ba["scope"] = "multi_ba"; break;
        case dem::DemandScope::region: ba["scope"] = "region"; break;
    }
    ba["fractions"] = rep.fractions;
    doc["balancing_authorities"] = std::move(ba);

    json demand;
    demand["total_load_mw"] = rep.total_load_mw;
    demand["gross_demand_mw"] = rep.gross_demand_mw;
    demand["capacity_mw"] = rep.capacity_mw;
    demand["injected_generators"] = rep.injected_generators;
    doc["demand"] = std::move(demand);

    json solve;
    solve["dc_level"] = rep.dc_level;
    solve["dc_status"] = rep.dc_status;
    solve["dc_objective_usd"] = rep.dc_objective;
    solve["ac_level"] = rep.ac_level;
    solve["ac_status"] = rep.ac_status;
    solve["ac_objective_usd"] = rep.ac_objective;
    solve["ac_loss_pct"] = rep.ac_loss_pct;
    solve["served_mw"] = rep.served_mw;
    solve["shed_mw"] = rep.shed_mw;
    solve["shunts_added"] = rep.shunts_added;
    doc["solve"] = std::move(solve);

    json coverage = json::array();
    for (const auto& [kv, row] : rep.coverage) {
        coverage.push_back({{"voltage_kv", kv},
                            {"route_km", row[0]},
                            {"circuit_km", row[1]},
                            {"reference_km", row[2]}});
    }
    doc["coverage"] = std::move(coverage);
    doc["warnings"] = rep.warnings;
    write_file(doc, path);
}

void write_topology_geojson(const std::vector<topo::Circuit>& circuits,
                            const std::vector<ingest::LineSection>& sections,
                            const std::string& path) {
    json features = json::array();
    for (const topo::Circuit& c : circuits) {
        json coords = json::array();
        std::vector<long long> ids;
        for (int idx : c.sections) {
            if (idx < 0 || idx >= static_cast<int>(sections.size())) continue;
            ids.push_back(sections[idx].id);
            json part = json::array();
            for (const geo::LatLon& p : sections[idx].path)
                part.push_back({p.lon, p.lat});
            coords.push_back(std::move(part));
        }
        json props;
        props["sections"] = ids;
        props["voltage_kv"] = c.voltage_kv;
        props["circuit_idx"] = c.circuit_idx;
        props["hvdc"] = c.hvdc;
        props["underground"] = c.underground;
        props["class"] = topo::to_string(c.cls);
        props["route_km"] = c.route_km;
        props["name"] = c.name;
        features.push_back({{"type", "Feature"},
                            {"geometry",
                             {{"type", "MultiLineString"}, {"coordinates", std::move(coords)}}},
                            {"properties", std::move(props)}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    write_file(doc, path);
}

}  // namespace gridforge::io
