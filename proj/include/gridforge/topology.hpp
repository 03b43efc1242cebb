#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridforge/diagnostics.hpp"
#include "gridforge/geometry.hpp"
#include "gridforge/ingest.hpp"
#include "gridforge/tables.hpp"

namespace gridforge::topo {

// One electrical circuit carried by a line section (a section with multiple
// voltages or parallel circuits yields several records).
struct CircuitRecord {
    int section = -1;     // index into sections
    double voltage_kv = 0;
    int circuit_idx = 0;  // parallel-circuit ordinal at this voltage
    bool hvdc = false;
};

enum class CircuitClass { inter_facility, loop, self_loop, single_facility, isolated, tap };

std::string to_string(CircuitClass c);

// Merged group of sections forming one electrical circuit between endpoints.
struct Circuit {
    std::vector<int> sections;      // member section indices, ascending
    double voltage_kv = 0;
    int circuit_idx = 0;
    bool hvdc = false;
    bool underground = false;       // majority of route length in cable
    CircuitClass cls = CircuitClass::isolated;
    bool cyclic = false;            // merge produced no free endpoints
    geo::LatLon end_a, end_b;       // free endpoints (valid unless cyclic)
    int fac_a = -1, fac_b = -1;     // containing facility, -1 outside
    double route_km = 0;
    std::string name;               // first nonempty member name
};

struct BusRec {
    int id = 0;
    geo::LatLon loc;
    double base_kv = 0;
    int facility = -1;      // -1 for ad-hoc (tower/junction) buses
    std::string name;
    std::string ba;         // balancing authority, demand stage
    double v_min = 0.95, v_max = 1.05;
};

enum class BranchKind { line, transformer };

struct BranchRec {
    int id = 0;
    int from = 0, to = 0;   // bus ids
    BranchKind kind = BranchKind::line;
    double r_pu = 0, x_pu = 0, b_pu = 0;  // on 100 MVA system base
    double rate_mva = 0;
    double angle_limit_deg = 30;
    double length_km = 0;
    double voltage_kv = 0;  // line class kv; transformers: LV side
    int circuit = -1;       // source circuit index, -1 for inferred transformers
};

struct GenRec {
    int id = 0;
    int bus = 0;
    std::string name;
    std::string technical_fuel = "unknown";
    std::string display_fuel = "Unknown";
    double p_max_mw = 0, p_min_mw = 0;
    double q_min_mvar = 0, q_max_mvar = 0;
    double c2 = 0, c1 = 0, c0 = 0;  // $/MW^2h, $/MWh, $/h
    double startup_usd = 0;
    double pf = 0.85;
    bool eia_matched = false;
    std::string eia_name;           // matched EIA-860 plant name (empty when unmatched)
    bool injected = false;          // added by the EIA reserve-margin pass
    double p_set_mw = 0;            // dispatch plan
    bool committed = false;
    double derated_p_max_mw = 0;    // availability-derated limit at the run hour
    long long plant_id = 0;         // source OSM plant or EIA row marker
};

struct LoadRec {
    int id = 0;
    int bus = 0;
    double p_mw = 0, q_mvar = 0;
};

struct ShuntRec {
    int id = 0;
    int bus = 0;
    double bs_mvar = 0;  // injection at 1.0 pu voltage; capacitor > 0
};

struct DcLinkRec {
    int id = 0;
    int from = 0, to = 0;
    double p_max_mw = 0;
    double loss0_mw = 0, loss1 = 0.01;
    double q_min_f = 0, q_max_f = 0, q_min_t = 0, q_max_t = 0;
    std::string name;
};

struct NetworkModel {
    double base_mva = 100.0;
    bool multi_state = false;
    std::vector<BusRec> buses;
    std::vector<BranchRec> branches;
    std::vector<GenRec> gens;
    std::vector<LoadRec> loads;
    std::vector<ShuntRec> shunts;
    std::vector<DcLinkRec> dclinks;
    int slack_bus = -1;

    const BusRec* bus_by_id(int id) const;
};

// Mirrors the construction funnel for the run report.
struct TopoStats {
    long long sections_input = 0;
    long long sections_tagged = 0;
    long long sections_inferred = 0;
    long long sections_unresolved = 0;
    long long sections_retained = 0;   // post >= 69 kV filter
    long long circuits_resolved = 0;
    long long merged_groups = 0;
    std::map<std::string, long long> class_counts;
    long long buses_created = 0;
    long long transformers_inferred = 0;
    long long branch_conversions = 0;  // catch-all kv-mismatch conversions
    long long generators_assigned = 0;
    long long generators_dropped = 0;
    long long dclinks_created = 0;
    long long bridging_transformers = 0;
    long long isolated_buses_removed = 0;
    long long genfree_component_buses_removed = 0;
    long long offmain_component_buses_removed = 0;
    long long final_buses = 0, final_branches = 0, final_generators = 0;
};

// --- pipeline steps (documented order; build_network runs them all) ---

struct InferenceResult {
    int iterations = 0;
    long long tagged = 0, inferred = 0, unresolved = 0;
};

// Iterative voltage adoption for untagged sections: unanimity rule, then
// 2/3-supermajority with >= 3 tagged neighbors; containing-facility voltages
// join the vote pool. Synchronous rounds, capped at 10.
InferenceResult infer_voltages(std::vector<ingest::LineSection>& sections,
                               const std::vector<ingest::Facility>& facilities,
                               const std::vector<geo::Footprint>& footprints);

// Drops sections below 69 kV or with no resolved voltage. Returns kept count.
long long filter_sections(std::vector<ingest::LineSection>& sections, Diagnostics& diag);

// Reconciles circuits / cables / voltage tags into per-circuit records
// (trust_voltage mode: the voltage list wins when it disagrees). HVDC signals
// are evaluated here so DC records carry a distinct merge key.
std::vector<CircuitRecord> resolve_circuit_counts(const std::vector<ingest::LineSection>& sections,
                                                  const tables::Tables& tbl, Diagnostics& diag);

// Buffered containment footprints, one per facility (polygon buffer 0.0006 deg;
// point features ~100 m radius).
std::vector<geo::Footprint> build_footprints(const std::vector<ingest::Facility>& facilities);

// Union-find merge of circuit records whose section endpoints snap together at
// matching voltage / circuit ordinal / dc flag. Result order is canonical
// (sorted by member sections), independent of input permutation.
std::vector<Circuit> merge_lines(const std::vector<ingest::LineSection>& sections,
                                 const std::vector<CircuitRecord>& records);

// Assigns each merged circuit exactly one CircuitClass.
void classify_circuits(std::vector<Circuit>& circuits,
                       const std::vector<ingest::LineSection>& sections,
                       const std::vector<ingest::Facility>& facilities,
                       const std::vector<geo::Footprint>& footprints);

struct BusBuild {
    std::vector<BusRec> buses;
    // circuit index -> (bus_a, bus_b) for inter-facility circuits
    std::map<int, std::pair<int, int>> circuit_buses;
};

// Buses from inter-facility circuit endpoints: grouped per facility footprint,
// ad-hoc endpoints clustered at <= 50 m great-circle, split per voltage when
// levels differ by more than 20%.
BusBuild create_buses(const std::vector<Circuit>& circuits,
                      const std::vector<ingest::Facility>& facilities,
                      const std::vector<geo::Footprint>& footprints,
                      const tables::Tables& tbl);

std::vector<Circuit> collect_inter_facility(const std::vector<Circuit>& circuits);

// Validation and clean-up: voltage-level bridging (two parallel units at EHV),
// isolated-bus removal, generator-free component removal, largest-component
// retention, slack assignment. next_branch is the first unused branch id.
// Throws when no generator survives.
void finalize_network(NetworkModel& model, TopoStats& stats, int next_branch, bool multi_state,
                      const tables::Tables& tbl, Diagnostics& diag);

// --- whole-stage entry point ---

struct BuildResult {
    NetworkModel model;
    TopoStats stats;
    std::vector<Circuit> circuits;               // all merged circuits, for the debug dump
    std::vector<ingest::LineSection> sections;   // post-inference, post-filter
};

// Runs voltage inference through finalization and parameter assignment,
// producing a solver-ready physical-unit model.
BuildResult build_network(const ingest::ParsedFeatures& parsed,
                          const ingest::FixtureTables& fixtures,
                          const tables::Tables& tbl,
                          bool multi_state,
                          Diagnostics& diag);

}  // namespace gridforge::topo
