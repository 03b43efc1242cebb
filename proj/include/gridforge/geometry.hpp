#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace gridforge::geo {

inline constexpr double kEarthRadiusKm = 6371.0088;  // WGS84 mean radius
inline constexpr double kMetersPerDegLat = 111319.9;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

// Great-circle distance in meters.
double haversine_m(const LatLon& a, const LatLon& b);

double polyline_length_km(const std::vector<LatLon>& path);

// Snap a coordinate to the 1e-6 degree grid (~11 cm), rounding half away
// from zero so that -x snaps to the negation of x's cell.
std::int64_t snap_coord(double deg);

struct SnapKey {
    std::int64_t lat = 0;
    std::int64_t lon = 0;
    bool operator==(const SnapKey&) const = default;
    bool operator<(const SnapKey& o) const {
        return lat != o.lat ? lat < o.lat : lon < o.lon;
    }
};

SnapKey snap(const LatLon& p);

struct SnapKeyHash {
    std::size_t operator()(const SnapKey& k) const {
        return std::hash<std::int64_t>()(k.lat * 1000003 + k.lon);
    }
};

struct Polygon {
    std::vector<LatLon> ring;  // open or closed; treated as closed
};

bool point_in_polygon(const LatLon& p, const Polygon& poly);

// Degree-space distance from a point to the polygon boundary (0 if inside).
double dist_to_polygon_deg(const LatLon& p, const Polygon& poly);

// Approximate metric distance to the boundary, longitide scaled by cos(lat).
double dist_to_polygon_m(const LatLon& p, const Polygon& poly);

// Substation or plant footprint used for endpoint containment. Polygons are
// expanded by a uniform degree-space buffer; point features become a circle
// of radius_deg (latitude-equivalent degrees, longitude scaled by cos(lat)).
struct Footprint {
    bool is_polygon = false;
    Polygon poly;
    LatLon center;
    double buffer_deg = 0.0;

    bool contains(const LatLon& p) const;
};

Footprint make_polygon_footprint(Polygon poly, double buffer_deg);
Footprint make_point_footprint(const LatLon& center, double radius_deg);

// Uniform-cell spatial hash for candidate lookup by location.
class GridIndex {
  public:
    explicit GridIndex(double cell_deg = 0.01) : cell_(cell_deg) {}

    void insert(const LatLon& p, int id);
    // All ids whose inserted point lies within radius_deg cells of p
    // (over-approximate; callers re-check exact geometry).
    std::vector<int> query(const LatLon& p, double radius_deg) const;

  private:
    double cell_;
    std::unordered_map<SnapKey, std::vector<int>, SnapKeyHash> cells_;
};

}  // namespace gridforge::geo
