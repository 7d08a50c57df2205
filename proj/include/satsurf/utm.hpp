#pragma once

#include <string>
#include <utility>

namespace satsurf {

// WGS84 transverse Mercator (UTM) conversion using the Krueger series in the
// transverse Mercator flattening parameter, carried to sixth order. In-zone
// accuracy is far below the millimetre level.
struct UtmZone {
    int number = 0;       // 1..60
    bool northern = true;

    double central_meridian_deg() const { return number * 6.0 - 183.0; }
    std::string str() const { return std::to_string(number) + (northern ? "N" : "S"); }
};

UtmZone parse_utm_zone(const std::string& text);

// (lat, lon) degrees -> (easting, northing) metres in the given zone.
std::pair<double, double> geodetic_to_utm(double lat_deg, double lon_deg, const UtmZone& zone);

// (easting, northing) metres -> (lat, lon) degrees.
std::pair<double, double> utm_to_geodetic(double easting, double northing, const UtmZone& zone);

}  // namespace satsurf
