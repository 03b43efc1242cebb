#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridforge/diagnostics.hpp"
#include "gridforge/geometry.hpp"

namespace gridforge::ingest {

// One GeoJSON feature, geometry flattened. Polygons keep outer rings only.
struct RawFeature {
    long long id = 0;
    std::string geom_type;                       // Point | LineString | Polygon
    geo::LatLon point;                           // Point
    std::vector<geo::LatLon> line;               // LineString
    std::vector<geo::Polygon> rings;             // Polygon / MultiPolygon outers
    std::map<std::string, std::string> tags;
};

struct VoltageTag {
    std::vector<double> kv;       // resolved levels, descending, deduplicated
    bool pm_prefix = false;       // any token carried a +/- prefix (HVDC hint)
    int dropped_tokens = 0;
};

struct LineSection {
    long long id = 0;
    std::vector<geo::LatLon> path;
    std::vector<double> voltages_kv;  // descending; empty until tagged/inferred
    bool voltage_tagged = false;      // true when from tags (vs inference)
    int cables = -1;                  // -1 when absent
    int circuits = -1;                // -1 when absent
    bool is_underground = false;
    std::string name;
    // HVDC signal inputs
    bool has_frequency_tag = false;
    bool frequency_dc = false;        // frequency=0 or =dc
    bool pm_voltage = false;          // +/- voltage prefix
    bool dc_type_tag = false;         // line=dc / cable=dc style tag
};

enum class FacilityKind { substation, plant };

struct Facility {
    long long id = 0;
    FacilityKind kind = FacilityKind::substation;
    std::string name;
    geo::LatLon center;
    bool is_polygon = false;
    geo::Polygon poly;                // valid when is_polygon
    std::vector<double> voltages_kv;  // from the facility's own voltage tag
    std::optional<double> output_mw;  // plants only
    std::string fuel_raw;             // plants only
};

struct PlantPoint {
    long long id = 0;
    std::string name;
    std::string fuel_raw;
    std::optional<double> output_mw;
    geo::LatLon loc;
};

struct ConverterPoint {
    long long id = 0;
    geo::LatLon loc;
};

struct ParsedFeatures {
    std::vector<LineSection> line_sections;
    std::vector<Facility> facilities;       // substations and plants
    std::vector<PlantPoint> plant_points;
    std::vector<ConverterPoint> converter_points;
    long long input_count = 0;
    long long substation_count = 0;         // facilities that are substations
    long long plant_count = 0;
    long long discarded_count = 0;
};

struct EiaPlant {
    std::string name;
    std::string fuel_raw;
    double capacity_mw = 0;
    geo::LatLon loc;
};

struct BaPolygon {
    std::string code;
    geo::Polygon poly;
};

struct CensusTract {
    geo::Polygon poly;
    double population = 0;
};

struct FixtureTables {
    std::vector<EiaPlant> eia860;
    std::map<std::string, double> eia923_heat_rate;          // normalized plant name -> BTU/kWh
    std::map<std::string, std::map<int, double>> ba_demand;  // BA -> hour -> MW
    std::map<std::string, double> state_peaks;               // state -> MW
    std::vector<BaPolygon> ba_polygons;
    std::map<std::string, std::string> ba_parent;            // sub-BA -> parent
    std::vector<CensusTract> census;
    double gas_price = 3.50;                                 // $/MMBtu
    std::map<std::string, std::set<std::string>> ba_states;  // optional: BA -> served states
    std::map<double, double> eia_circuit_km;                 // optional: kv -> circuit km
};

// --- operations ---

// Reads one state GeoJSON file. Throws std::runtime_error on I/O or parse failure.
std::vector<RawFeature> load_state_geojson(const std::string& path);

// Concatenates per-state feature lists, deduplicating by feature id: the first
// occurrence wins; later occurrences with differing tags add a diagnostic.
std::vector<RawFeature> merge_states(const std::vector<std::vector<RawFeature>>& states,
                                     Diagnostics& diag);

// Partitions raw features into sections / facilities / plants / converters.
// Every input feature lands in exactly one bin (discards counted).
ParsedFeatures parse_feature_collection(const std::vector<RawFeature>& features,
                                        Diagnostics& diag);

// "138000" -> 138 kV; semicolon lists split; "+/-500000" flags pm_prefix.
// Unparseable tokens are dropped and counted.
VoltageTag parse_voltage_tag(const std::string& tag);

// Render a voltage list back to canonical tag form (volts, semicolon-joined).
std::string render_voltage_tag(const std::vector<double>& kv);

// "400 MW", "400000 kW", "1.5 GW", bare "400" (MW) -> MW. nullopt when unparseable.
std::optional<double> parse_capacity_mw(const std::string& text);

// Loads all fixture tables from a directory. Missing optional files (gas_price,
// ba_states, eia_circuit_miles) get defaults; missing required files throw.
FixtureTables load_fixtures(const std::string& dir, Diagnostics& diag);

// Lowercase, alphanumeric runs separated by single spaces ("St. Lucie #2" ->
// "st lucie 2"). Used to join OSM plant names against EIA tables.
std::string normalize_name(const std::string& s);

}  // namespace gridforge::ingest
