#include "gridforge/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace gridforge::ingest {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

std::string tag_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        std::ostringstream os;
        os << v.get<double>();
        return os.str();
    }
    if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
    return "";
}

long long feature_id(const json& f, long long fallback) {
    auto digits = [](const std::string& s) -> std::optional<long long> {
        auto pos = s.find_last_of('/');
        std::string d = pos == std::string::npos ? s : s.substr(pos + 1);
        if (d.empty() || d.find_first_not_of("-0123456789") != std::string::npos)
            return std::nullopt;
        try {
            return std::stoll(d);
        } catch (...) {
            return std::nullopt;
        }
    };
    if (f.contains("id")) {
        const auto& id = f["id"];
        if (id.is_number_integer()) return id.get<long long>();
        if (id.is_string())
            if (auto v = digits(id.get<std::string>())) return *v;
    }
    if (f.contains("properties") && f["properties"].is_object()) {
        for (const char* key : {"@id", "osm_id", "id"}) {
            if (f["properties"].contains(key)) {
                const auto& id = f["properties"][key];
                if (id.is_number_integer()) return id.get<long long>();
                if (id.is_string())
                    if (auto v = digits(id.get<std::string>())) return *v;
            }
        }
    }
    return fallback;
}

geo::LatLon coord(const json& c) { return {c.at(1).get<double>(), c.at(0).get<double>()}; }

std::vector<geo::LatLon> coord_list(const json& arr) {
    std::vector<geo::LatLon> out;
    out.reserve(arr.size());
    for (const auto& c : arr) out.push_back(coord(c));
    return out;
}

// --- minimal CSV with quoted-field support ---

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name, const std::string& file) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (lower(header[i]) == lower(name)) return static_cast<int>(i);
        throw std::runtime_error(file + ": missing column '" + name + "'");
    }
};

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    Csv csv;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            csv.header = fields;
            first = false;
        } else {
            csv.rows.push_back(fields);
        }
    }
    if (first) throw std::runtime_error(path + ": empty file");
    return csv;
}

double num_field(const std::vector<std::string>& row, int col, const std::string& file,
                 std::size_t line_no) {
    if (col >= static_cast<int>(row.size()))
        throw std::runtime_error(file + ": short row " + std::to_string(line_no));
    try {
        std::size_t used = 0;
        double v = std::stod(row[col], &used);
        if (used != row[col].size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw std::runtime_error(file + ": non-numeric '" + row[col] + "' at row " +
                                 std::to_string(line_no));
    }
}

}  // namespace

std::vector<RawFeature> load_state_geojson(const std::string& path) {
    json j = read_json_file(path);
    if (!j.contains("features") || !j["features"].is_array())
        throw std::runtime_error(path + ": not a FeatureCollection");
    std::vector<RawFeature> out;
    long long fallback = -1;
    for (const auto& f : j["features"]) {
        RawFeature rf;
        rf.id = feature_id(f, fallback--);
        if (f.contains("properties") && f["properties"].is_object()) {
            for (auto it = f["properties"].begin(); it != f["properties"].end(); ++it) {
                std::string v = tag_to_string(it.value());
                if (!v.empty()) rf.tags[it.key()] = v;
            }
        }
        if (!f.contains("geometry") || !f["geometry"].is_object()) continue;
        const auto& g = f["geometry"];
        const std::string type = g.value("type", "");
        const auto& cs = g.contains("coordinates") ? g["coordinates"] : json::array();
        if (type == "Point" && cs.size() >= 2) {
            rf.geom_type = "Point";
            rf.point = coord(cs);
        } else if (type == "LineString" && cs.size() >= 2) {
            rf.geom_type = "LineString";
            rf.line = coord_list(cs);
        } else if (type == "MultiLineString" && !cs.empty() && cs[0].size() >= 2) {
            rf.geom_type = "LineString";  // first part only; parts beyond are rare
            rf.line = coord_list(cs[0]);
        } else if (type == "Polygon" && !cs.empty()) {
            rf.geom_type = "Polygon";
            rf.rings.push_back({coord_list(cs[0])});
        } else if (type == "MultiPolygon" && !cs.empty()) {
            rf.geom_type = "Polygon";
            for (const auto& p : cs)
                if (!p.empty()) rf.rings.push_back({coord_list(p[0])});
        } else {
            continue;  // unsupported geometry
        }
        out.push_back(std::move(rf));
    }
    return out;
}

std::vector<RawFeature> merge_states(const std::vector<std::vector<RawFeature>>& states,
                                     Diagnostics& diag) {
    std::vector<RawFeature> out;
    std::unordered_map<long long, std::size_t> seen;
    for (const auto& st : states) {
        for (const auto& f : st) {
            auto it = seen.find(f.id);
            if (it == seen.end()) {
                seen[f.id] = out.size();
                out.push_back(f);
            } else {
                diag.count("merge.duplicate_features");
                if (out[it->second].tags != f.tags) {
                    diag.count("merge.tag_conflicts");
                    diag.warn("duplicate feature " + std::to_string(f.id) +
                              " with conflicting tags; first occurrence kept");
                }
            }
        }
    }
    return out;
}

VoltageTag parse_voltage_tag(const std::string& tag) {
    VoltageTag out;
    std::stringstream ss(tag);
    std::string token;
    while (std::getline(ss, token, ';')) {
        std::string t = trim(token);
        if (t.empty()) {
            ++out.dropped_tokens;
            continue;
        }
        bool pm = false;
        // bipolar prefixes: UTF-8 plus-minus, "+/-", "+-"
        if (t.rfind("\xc2\xb1", 0) == 0) {
            pm = true;
            t = trim(t.substr(2));
        } else if (t.rfind("+/-", 0) == 0) {
            pm = true;
            t = trim(t.substr(3));
        } else if (t.rfind("+-", 0) == 0) {
            pm = true;
            t = trim(t.substr(2));
        }
        try {
            std::size_t used = 0;
            double volts = std::stod(t, &used);
            if (used != t.size() || !(volts > 0) || !std::isfinite(volts))
                throw std::invalid_argument("bad");
            out.kv.push_back(volts / 1000.0);
            if (pm) out.pm_prefix = true;
        } catch (...) {
            ++out.dropped_tokens;
        }
    }
    std::sort(out.kv.rbegin(), out.kv.rend());
    out.kv.erase(std::unique(out.kv.begin(), out.kv.end()), out.kv.end());
    return out;
}

std::string render_voltage_tag(const std::vector<double>& kv) {
    std::string out;
    for (std::size_t i = 0; i < kv.size(); ++i) {
        if (i) out += ';';
        double volts = kv[i] * 1000.0;
        if (std::abs(volts - std::round(volts)) < 1e-6) {
            out += std::to_string(static_cast<long long>(std::llround(volts)));
        } else {
            std::ostringstream os;
            os << volts;
            out += os.str();
        }
    }
    return out;
}

std::optional<double> parse_capacity_mw(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || !std::isfinite(v) || v < 0) return std::nullopt;
    std::string unit = lower(trim(end));
    if (unit.empty() || unit == "mw") return v;
    if (unit == "kw") return v / 1000.0;
    if (unit == "gw") return v * 1000.0;
    if (unit == "w") return v / 1e6;
    return std::nullopt;
}

ParsedFeatures parse_feature_collection(const std::vector<RawFeature>& features,
                                        Diagnostics& diag) {
    ParsedFeatures out;
    out.input_count = static_cast<long long>(features.size());

    auto tag = [](const RawFeature& f, const char* key) -> std::string {
        auto it = f.tags.find(key);
        return it == f.tags.end() ? "" : it->second;
    };
    auto centroid = [](const geo::Polygon& poly) {
        geo::LatLon c;
        for (const auto& v : poly.ring) {
            c.lat += v.lat;
            c.lon += v.lon;
        }
        if (!poly.ring.empty()) {
            c.lat /= poly.ring.size();
            c.lon /= poly.ring.size();
        }
        return c;
    };

    for (const auto& f : features) {
        const std::string power = lower(tag(f, "power"));
        if (power == "line" || power == "cable") {
            if (f.geom_type != "LineString" || f.line.size() < 2) {
                ++out.discarded_count;
                diag.count("parse.lines_bad_geometry");
                continue;
            }
            LineSection s;
            s.id = f.id;
            s.path = f.line;
            s.name = tag(f, "name");
            VoltageTag vt = parse_voltage_tag(tag(f, "voltage"));
            if (vt.dropped_tokens) diag.count("parse.voltage_tokens_dropped", vt.dropped_tokens);
            s.voltages_kv = vt.kv;
            s.voltage_tagged = !vt.kv.empty();
            s.pm_voltage = vt.pm_prefix;
            if (const std::string c = tag(f, "cables"); !c.empty()) {
                int total = 0;
                std::stringstream ss(c);
                std::string tok;
                bool ok = false;
                while (std::getline(ss, tok, ';')) {
                    try {
                        total += std::stoi(trim(tok));
                        ok = true;
                    } catch (...) {
                    }
                }
                if (ok) s.cables = total;
            }
            if (const std::string c = tag(f, "circuits"); !c.empty()) {
                try {
                    s.circuits = std::stoi(c);
                } catch (...) {
                    diag.count("parse.bad_circuits_tag");
                }
            }
            s.is_underground = power == "cable" || lower(tag(f, "location")) == "underground";
            if (const std::string fr = lower(tag(f, "frequency")); !fr.empty()) {
                s.has_frequency_tag = true;
                s.frequency_dc = fr == "0" || fr == "dc";
            }
            const std::string lt = lower(tag(f, "line:type")), ct = lower(tag(f, "cable:type"));
            s.dc_type_tag = lt == "dc" || ct == "dc";
            out.line_sections.push_back(std::move(s));
        } else if (power == "substation") {
            Facility fac;
            fac.id = f.id;
            fac.kind = FacilityKind::substation;
            fac.name = tag(f, "name");
            VoltageTag vt = parse_voltage_tag(tag(f, "voltage"));
            fac.voltages_kv = vt.kv;
            if (f.geom_type == "Polygon" && !f.rings.empty()) {
                fac.is_polygon = true;
                fac.poly = f.rings.front();
                fac.center = centroid(fac.poly);
            } else if (f.geom_type == "Point") {
                fac.center = f.point;
            } else {
                ++out.discarded_count;
                diag.count("parse.substations_bad_geometry");
                continue;
            }
            ++out.substation_count;
            out.facilities.push_back(std::move(fac));
        } else if (power == "plant") {
            PlantPoint p;
            p.id = f.id;
            p.name = tag(f, "name");
            p.fuel_raw = tag(f, "plant:source");
            const std::string cap = tag(f, "plant:output:electricity");
            if (!cap.empty()) {
                p.output_mw = parse_capacity_mw(cap);
                if (!p.output_mw) diag.count("parse.bad_capacity_tag");
            }
            Facility fac;
            fac.id = f.id;
            fac.kind = FacilityKind::plant;
            fac.name = p.name;
            fac.fuel_raw = p.fuel_raw;
            fac.output_mw = p.output_mw;
            if (f.geom_type == "Polygon" && !f.rings.empty()) {
                fac.is_polygon = true;
                fac.poly = f.rings.front();
                fac.center = centroid(fac.poly);
            } else if (f.geom_type == "Point") {
                fac.center = f.point;
            } else {
                ++out.discarded_count;
                diag.count("parse.plants_bad_geometry");
                continue;
            }
            p.loc = fac.center;
            ++out.plant_count;
            out.facilities.push_back(std::move(fac));
            out.plant_points.push_back(std::move(p));
        } else if (power == "converter") {
            if (f.geom_type == "Point") {
                out.converter_points.push_back({f.id, f.point});
            } else if (f.geom_type == "Polygon" && !f.rings.empty()) {
                out.converter_points.push_back({f.id, centroid(f.rings.front())});
            } else {
                ++out.discarded_count;
                continue;
            }
        } else {
            // includes power=generator and power=transformer, unused by design
            ++out.discarded_count;
        }
    }
    diag.count("parse.line_sections", static_cast<long long>(out.line_sections.size()));
    diag.count("parse.substations", out.substation_count);
    diag.count("parse.plants", out.plant_count);
    diag.count("parse.converters", static_cast<long long>(out.converter_points.size()));
    diag.count("parse.discarded", out.discarded_count);
    return out;
}

FixtureTables load_fixtures(const std::string& dir, Diagnostics& diag) {
    FixtureTables fx;

    {
        Csv csv = read_csv(dir + "/eia860.csv");
        const int c_name = csv.col("name", "eia860.csv");
        const int c_fuel = csv.col("fuel", "eia860.csv");
        const int c_cap = csv.col("capacity_mw", "eia860.csv");
        const int c_lat = csv.col("lat", "eia860.csv");
        const int c_lon = csv.col("lon", "eia860.csv");
        std::size_t line_no = 1;
        for (const auto& row : csv.rows) {
            ++line_no;
            EiaPlant p;
            p.name = row[c_name];
            p.fuel_raw = row[c_fuel];
            p.capacity_mw = num_field(row, c_cap, "eia860.csv", line_no);
            p.loc.lat = num_field(row, c_lat, "eia860.csv", line_no);
            p.loc.lon = num_field(row, c_lon, "eia860.csv", line_no);
            fx.eia860.push_back(std::move(p));
        }
    }

    {
        Csv csv = read_csv(dir + "/eia923.csv");
        const int c_name = csv.col("plant_name", "eia923.csv");
        const int c_hr = csv.col("heat_rate_btu_per_kwh", "eia923.csv");
        std::size_t line_no = 1;
        for (const auto& row : csv.rows) {
            ++line_no;
            fx.eia923_heat_rate[normalize_name(row[c_name])] =
                num_field(row, c_hr, "eia923.csv", line_no);
        }
    }

    {
        Csv csv = read_csv(dir + "/ba_demand.csv");
        const int c_ba = csv.col("ba", "ba_demand.csv");
        const int c_hr = csv.col("hour_utc", "ba_demand.csv");
        const int c_mw = csv.col("mw", "ba_demand.csv");
        std::size_t line_no = 1;
        for (const auto& row : csv.rows) {
            ++line_no;
            const int h = static_cast<int>(num_field(row, c_hr, "ba_demand.csv", line_no));
            fx.ba_demand[row[c_ba]][h] = num_field(row, c_mw, "ba_demand.csv", line_no);
        }
    }

    {
        Csv csv = read_csv(dir + "/state_peaks.csv");
        const int c_st = csv.col("state", "state_peaks.csv");
        const int c_mw = csv.col("peak_mw", "state_peaks.csv");
        std::size_t line_no = 1;
        for (const auto& row : csv.rows) {
            ++line_no;
            fx.state_peaks[row[c_st]] = num_field(row, c_mw, "state_peaks.csv", line_no);
        }
    }

    {
        json j = read_json_file(dir + "/ba_polygons.geojson");
        for (const auto& f : j.value("features", json::array())) {
            if (!f.contains("properties") || !f["properties"].contains("ba")) continue;
            const auto& g = f["geometry"];
            if (g.value("type", "") == "Polygon" && !g["coordinates"].empty()) {
                fx.ba_polygons.push_back(
                    {f["properties"]["ba"].get<std::string>(), {coord_list(g["coordinates"][0])}});
            }
        }
        if (fx.ba_polygons.empty())
            throw std::runtime_error("ba_polygons.geojson: no usable polygons");
    }

    {
        Csv csv = read_csv(dir + "/ba_parent.csv");
        const int c_sub = csv.col("sub_ba", "ba_parent.csv");
        const int c_par = csv.col("parent", "ba_parent.csv");
        for (const auto& row : csv.rows) fx.ba_parent[row[c_sub]] = row[c_par];
    }

    {
        json j = read_json_file(dir + "/census_tracts.geojson");
        for (const auto& f : j.value("features", json::array())) {
            if (!f.contains("properties") || !f["properties"].contains("population")) continue;
            const auto& g = f["geometry"];
            if (g.value("type", "") == "Polygon" && !g["coordinates"].empty()) {
                fx.census.push_back({{coord_list(g["coordinates"][0])},
                                     f["properties"]["population"].get<double>()});
            }
        }
        if (fx.census.empty()) throw std::runtime_error("census_tracts.geojson: no usable tracts");
    }

    {
        std::ifstream in(dir + "/gas_price.txt");
        if (in) {
            double v = 0;
            if (in >> v && v > 0) {
                fx.gas_price = v;
            } else {
                throw std::runtime_error("gas_price.txt: not a positive number");
            }
        } else {
            diag.count("fixtures.gas_price_defaulted");
            diag.warn("gas_price.txt absent; using default 3.50 $/MMBtu");
        }
    }

    if (std::ifstream probe(dir + "/ba_states.csv"); probe) {
        Csv csv = read_csv(dir + "/ba_states.csv");
        const int c_ba = csv.col("ba", "ba_states.csv");
        const int c_st = csv.col("state", "ba_states.csv");
        for (const auto& row : csv.rows) fx.ba_states[row[c_ba]].insert(row[c_st]);
    }

    if (std::ifstream probe(dir + "/eia_circuit_miles.csv"); probe) {
        Csv csv = read_csv(dir + "/eia_circuit_miles.csv");
        const int c_kv = csv.col("voltage_kv", "eia_circuit_miles.csv");
        const int c_km = csv.col("circuit_km", "eia_circuit_miles.csv");
        std::size_t line_no = 1;
        for (const auto& row : csv.rows) {
            ++line_no;
            fx.eia_circuit_km[num_field(row, c_kv, "eia_circuit_miles.csv", line_no)] =
                num_field(row, c_km, "eia_circuit_miles.csv", line_no);
        }
    }

    // dangling references are diagnostics, not failures
    for (const auto& [ba, hours] : fx.ba_demand) {
        (void)hours;
        bool found = false;
        for (const auto& p : fx.ba_polygons)
            if (p.code == ba) found = true;
        for (const auto& [sub, parent] : fx.ba_parent)
            if (sub == ba || parent == ba) found = true;
        if (!found) {
            diag.count("fixtures.dangling_ba_demand");
            diag.warn("ba_demand references BA '" + ba + "' with no polygon or parent");
        }
    }
    return fx;
}

std::string normalize_name(const std::string& s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            if (space && !out.empty()) out += ' ';
            space = false;
            out += static_cast<char>(std::tolower(c));
        } else {
            space = true;
        }
    }
    return out;
}

}  // namespace gridforge::ingest
