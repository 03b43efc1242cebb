#include "gridforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridforge::geo {

double haversine_m(const LatLon& a, const LatLon& b) {
    constexpr double kDeg2Rad = M_PI / 180.0;
    const double phi1 = a.lat * kDeg2Rad, phi2 = b.lat * kDeg2Rad;
    const double dphi = (b.lat - a.lat) * kDeg2Rad;
    const double dlam = (b.lon - a.lon) * kDeg2Rad;
    const double s1 = std::sin(dphi / 2), s2 = std::sin(dlam / 2);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * 1000.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

double polyline_length_km(const std::vector<LatLon>& path) {
    double m = 0;
    for (std::size_t i = 1; i < path.size(); ++i) m += haversine_m(path[i - 1], path[i]);
    return m / 1000.0;
}

std::int64_t snap_coord(double deg) {
    const double scaled = deg * 1e6;
    // round half away from zero, unlike llround's dependence on rounding mode
    return static_cast<std::int64_t>(scaled >= 0 ? std::floor(scaled + 0.5)
                                                 : std::ceil(scaled - 0.5));
}

SnapKey snap(const LatLon& p) { return SnapKey{snap_coord(p.lat), snap_coord(p.lon)}; }

bool point_in_polygon(const LatLon& p, const Polygon& poly) {
    const auto& r = poly.ring;
    const std::size_t n = r.size();
    if (n < 3) return false;
    bool in = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const bool straddles = (r[i].lat > p.lat) != (r[j].lat > p.lat);
        if (straddles) {
            const double x = r[j].lon + (p.lat - r[j].lat) / (r[i].lat - r[j].lat) *
                                            (r[i].lon - r[j].lon);
            if (p.lon < x) in = !in;
        }
    }
    return in;
}

namespace {

// Distance from p to segment ab with the given horizontal scale factor on
// longitude (1.0 = raw degree space).
double seg_dist(const LatLon& p, const LatLon& a, const LatLon& b, double lon_scale) {
    const double ax = a.lon * lon_scale, ay = a.lat;
    const double bx = b.lon * lon_scale, by = b.lat;
    const double px = p.lon * lon_scale, py = p.lat;
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = ax + t * dx - px, ey = ay + t * dy - py;
    return std::sqrt(ex * ex + ey * ey);
}

double boundary_dist(const LatLon& p, const Polygon& poly, double lon_scale) {
    const auto& r = poly.ring;
    if (r.empty()) return std::numeric_limits<double>::infinity();
    if (r.size() == 1) return seg_dist(p, r[0], r[0], lon_scale);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++)
        best = std::min(best, seg_dist(p, r[j], r[i], lon_scale));
    return best;
}

}  // namespace

double dist_to_polygon_deg(const LatLon& p, const Polygon& poly) {
    if (point_in_polygon(p, poly)) return 0.0;
    return boundary_dist(p, poly, 1.0);
}

double dist_to_polygon_m(const LatLon& p, const Polygon& poly) {
    if (point_in_polygon(p, poly)) return 0.0;
    const double scale = std::cos(p.lat * M_PI / 180.0);
    return boundary_dist(p, poly, scale) * kMetersPerDegLat;
}

bool Footprint::contains(const LatLon& p) const {
    if (is_polygon) {
        if (point_in_polygon(p, poly)) return true;
        return boundary_dist(p, poly, 1.0) <= buffer_deg;
    }
    const double scale = std::cos(center.lat * M_PI / 180.0);
    const double dx = (p.lon - center.lon) * scale, dy = p.lat - center.lat;
    return std::sqrt(dx * dx + dy * dy) <= buffer_deg;
}

Footprint make_polygon_footprint(Polygon poly, double buffer_deg) {
    Footprint f;
    f.is_polygon = true;
    f.poly = std::move(poly);
    f.buffer_deg = buffer_deg;
    double lat = 0, lon = 0;
    for (const auto& v : f.poly.ring) {
        lat += v.lat;
        lon += v.lon;
    }
    if (!f.poly.ring.empty()) {
        f.center = {lat / f.poly.ring.size(), lon / f.poly.ring.size()};
    }
    return f;
}

Footprint make_point_footprint(const LatLon& center, double radius_deg) {
    Footprint f;
    f.is_polygon = false;
    f.center = center;
    f.buffer_deg = radius_deg;
    return f;
}

void GridIndex::insert(const LatLon& p, int id) {
    SnapKey k{static_cast<std::int64_t>(std::floor(p.lat / cell_)),
              static_cast<std::int64_t>(std::floor(p.lon / cell_))};
    cells_[k].push_back(id);
}

std::vector<int> GridIndex::query(const LatLon& p, double radius_deg) const {
    const auto reach = static_cast<std::int64_t>(std::ceil(radius_deg / cell_)) + 1;
    const auto clat = static_cast<std::int64_t>(std::floor(p.lat / cell_));
    const auto clon = static_cast<std::int64_t>(std::floor(p.lon / cell_));
    std::vector<int> out;
    for (std::int64_t i = clat - reach; i <= clat + reach; ++i)
        for (std::int64_t j = clon - reach; j <= clon + reach; ++j) {
            auto it = cells_.find(SnapKey{i, j});
            if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace gridforge::geo
