#include <doctest.h>

#include "satsurf/common.hpp"
#include "satsurf/utm.hpp"

using namespace satsurf;

TEST_CASE("utm zone parsing") {
    const UtmZone z = parse_utm_zone("17N");
    CHECK(z.number == 17);
    CHECK(z.northern);
    CHECK(z.central_meridian_deg() == doctest::Approx(-81.0));
    CHECK(parse_utm_zone("33S").northern == false);
    CHECK_THROWS_AS(parse_utm_zone("0N"), ValidationError);
    CHECK_THROWS_AS(parse_utm_zone("17X"), ValidationError);
    CHECK_THROWS_AS(parse_utm_zone(""), ValidationError);
}

TEST_CASE("utm exact anchors: central meridian and equator") {
    const UtmZone z = parse_utm_zone("17N");
    // on the central meridian the easting is exactly the false easting
    auto [e, n] = geodetic_to_utm(30.0, -81.0, z);
    CHECK(e == doctest::Approx(500000.0).epsilon(1e-12));
    CHECK(n > 3.3e6);
    // the equator maps to northing zero in a northern zone
    auto [e2, n2] = geodetic_to_utm(0.0, -81.5, z);
    CHECK(std::fabs(n2) < 1e-6);
    (void)e2;
}

TEST_CASE("utm roundtrip across the zone") {
    const UtmZone z = parse_utm_zone("17N");
    for (double lat = 0.5; lat < 70.0; lat += 7.3) {
        for (double lon = -83.9; lon < -78.1; lon += 0.7) {
            auto [e, n] = geodetic_to_utm(lat, lon, z);
            auto [lat2, lon2] = utm_to_geodetic(e, n, z);
            CHECK(lat2 == doctest::Approx(lat).epsilon(1e-11));
            CHECK(lon2 == doctest::Approx(lon).epsilon(1e-11));
        }
    }
}

TEST_CASE("utm southern hemisphere roundtrip") {
    const UtmZone z = parse_utm_zone("33S");
    auto [e, n] = geodetic_to_utm(-33.5, 15.2, z);
    CHECK(n > 0);  // false northing applies
    auto [lat, lon] = utm_to_geodetic(e, n, z);
    CHECK(lat == doctest::Approx(-33.5).epsilon(1e-11));
    CHECK(lon == doctest::Approx(15.2).epsilon(1e-11));
}

TEST_CASE("utm scale is k0 on the central meridian") {
    // 1 m of true northward distance should map to ~0.9996 m of northing
    const UtmZone z = parse_utm_zone("17N");
    const double lat = 30.0, dlat = 1e-5;
    auto [e1, n1] = geodetic_to_utm(lat, -81.0, z);
    auto [e2, n2] = geodetic_to_utm(lat + dlat, -81.0, z);
    (void)e1;
    (void)e2;
    // meridian arc per degree at 30N is ~110852 m
    const double metres = (n2 - n1) / dlat / 110852.4;
    CHECK(metres == doctest::Approx(0.9996).epsilon(2e-4));
}
