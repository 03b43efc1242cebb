#include <cmath>

#include "doctest.h"
#include "gridforge/geometry.hpp"

using namespace gridforge::geo;

TEST_CASE("haversine matches the meridian arc length") {
    // one degree of latitude on the mean sphere: R * pi/180
    const double expect = kEarthRadiusKm * 1000.0 * M_PI / 180.0;
    const double got = haversine_m({40.0, -100.0}, {41.0, -100.0});
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("haversine is symmetric and zero at identity") {
    const LatLon a{37.5, -77.4}, b{39.0, -76.6};
    CHECK(haversine_m(a, b) == doctest::Approx(haversine_m(b, a)));
    CHECK(haversine_m(a, a) == 0.0);
}

TEST_CASE("haversine shrinks with cos(lat) along a parallel") {
    const double at_equator = haversine_m({0.0, 10.0}, {0.0, 11.0});
    const double at_60 = haversine_m({60.0, 10.0}, {60.0, 11.0});
    CHECK(at_60 / at_equator == doctest::Approx(std::cos(60.0 * M_PI / 180.0)).epsilon(1e-4));
}

TEST_CASE("polyline length sums the segments") {
    std::vector<LatLon> path = {{40.0, -100.0}, {40.5, -100.0}, {41.0, -100.0}};
    const double direct = haversine_m(path.front(), path.back()) / 1000.0;
    CHECK(polyline_length_km(path) == doctest::Approx(direct).epsilon(1e-9));
    CHECK(polyline_length_km({{40.0, -100.0}}) == 0.0);
}

TEST_CASE("snap rounds half away from zero") {
    CHECK(snap_coord(1.0000005) == 1000001);
    CHECK(snap_coord(-1.0000005) == -1000001);
    CHECK(snap_coord(1.0000004) == 1000000);
    CHECK(snap_coord(-1.0000004) == -1000000);
    CHECK(snap_coord(0.0) == 0);
}

TEST_CASE("snap keys identify coincident endpoints") {
    const SnapKey a = snap({40.123456, -100.654321});
    const SnapKey b = snap({40.1234561, -100.6543211});  // inside the same cell
    const SnapKey c = snap({40.123459, -100.654321});
    CHECK(a == b);
    CHECK(!(a == c));
}

TEST_CASE("point in polygon basic containment") {
    Polygon sq;
    sq.ring = {{0, 0}, {0, 10}, {10, 10}, {10, 0}};
    CHECK(point_in_polygon({5, 5}, sq));
    CHECK(not point_in_polygon({15, 5}, sq));
    CHECK(not point_in_polygon({-1, -1}, sq));
}

TEST_CASE("point in polygon handles concave shapes") {
    Polygon c;  // U-shape opening north
    c.ring = {{0, 0}, {0, 10}, {4, 10}, {4, 4}, {6, 4}, {6, 10}, {10, 10}, {10, 0}};
    CHECK(point_in_polygon({2, 5}, c));
    CHECK(not point_in_polygon({5, 8}, c));  // inside the notch
    CHECK(point_in_polygon({5, 2}, c));
}

TEST_CASE("distance to polygon is zero inside, positive outside") {
    Polygon sq;
    sq.ring = {{0, 0}, {0, 2}, {2, 2}, {2, 0}};
    CHECK(dist_to_polygon_deg({1, 1}, sq) == 0.0);
    CHECK(dist_to_polygon_deg({1, 3}, sq) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dist_to_polygon_m({0, 1}, sq) == 0.0);
    const double one_deg_lat = haversine_m({3.0, 1.0}, {2.0, 1.0});
    CHECK(dist_to_polygon_m({3.0, 1.0}, sq) == doctest::Approx(one_deg_lat).epsilon(2e-2));
}

TEST_CASE("footprints buffer polygons and inflate points") {
    Polygon sq;
    sq.ring = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    const Footprint fp = make_polygon_footprint(sq, 0.1);
    CHECK(fp.contains({0.5, 0.5}));
    CHECK(fp.contains({1.05, 0.5}));   // within the buffer
    CHECK(not fp.contains({1.2, 0.5}));

    const Footprint pt = make_point_footprint({40.0, -100.0}, 0.001);
    CHECK(pt.contains({40.0005, -100.0}));
    CHECK(not pt.contains({40.002, -100.0}));
}

TEST_CASE("grid index returns every candidate within the radius") {
    GridIndex idx(0.01);
    idx.insert({40.0, -100.0}, 1);
    idx.insert({40.005, -100.005}, 2);
    idx.insert({41.0, -100.0}, 3);

    const auto near = idx.query({40.001, -100.001}, 0.02);
    CHECK(std::count(near.begin(), near.end(), 1) == 1);
    CHECK(std::count(near.begin(), near.end(), 2) == 1);
    CHECK(std::count(near.begin(), near.end(), 3) == 0);

    const auto far = idx.query({45.0, -90.0}, 0.02);
    CHECK(far.empty());
}
