#pragma once

#include <string>

#include "gridforge/demand.hpp"
#include "gridforge/relaxation.hpp"
#include "gridforge/topology.hpp"

namespace gridforge::io {

// MATPOWER-style JSON: top-level keys baseMVA, bus, branch, gen, gencost,
// dcline, shunt, load; arrays ordered by id, object keys alphabetical, floats
// in shortest round-trip form. Reading rejects models that fail validation.
void write_model_json(const topo::NetworkModel& model, const std::string& path);
topo::NetworkModel read_model_json(const std::string& path);

// Solution artifact: OpfSolution fields plus the attempt log. Timing fields
// are zeroed in artifacts so runs stay byte-identical.
void write_solution_json(const topo::NetworkModel& model, const opf::OpfSolution& sol,
                         const std::vector<opf::AttemptRecord>& attempts,
                         const std::string& path);

struct ReportInputs {
    topo::TopoStats stats;
    dem::BaAssignment ba;
    std::map<std::string, double> fractions;
    double total_load_mw = 0;
    double gross_demand_mw = 0;
    double capacity_mw = 0;           // derated, post-injection
    int injected_generators = 0;
    std::string dc_level, ac_level, dc_status, ac_status;
    double dc_objective = 0, ac_objective = 0;
    double ac_loss_pct = 0;
    double served_mw = 0, shed_mw = 0;
    int shunts_added = 0;
    // kv -> {route_km, circuit_km, reference_km} coverage rows
    std::map<double, std::array<double, 3>> coverage;
    std::vector<std::string> warnings;
};

void write_report_json(const ReportInputs& rep, const std::string& path);

// Debug dump of merged circuits with classification, voltage and dc flags.
void write_topology_geojson(const std::vector<topo::Circuit>& circuits,
                            const std::vector<ingest::LineSection>& sections,
                            const std::string& path);

}  // namespace gridforge::io
