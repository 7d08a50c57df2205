#include "satsurf/utm.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include "satsurf/common.hpp"

namespace satsurf {

namespace {

constexpr double kA = 6378137.0;                // WGS84 semi-major axis [m]
constexpr double kF = 1.0 / 298.257223563;      // WGS84 flattening
constexpr double kK0 = 0.9996;                  // UTM scale on the central meridian
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;

constexpr double kDeg = M_PI / 180.0;

struct Series {
    double n;       // third flattening
    double aCap;    // rectifying radius
    double e;       // first eccentricity
    double alpha[6];
    double beta[6];
};

const Series& series() {
    static const Series s = [] {
        Series q{};
        const double n = kF / (2.0 - kF);
        const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
        q.n = n;
        q.aCap = kA / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
        q.e = std::sqrt(kF * (2.0 - kF));
        q.alpha[0] = n / 2.0 - 2.0 / 3.0 * n2 + 5.0 / 16.0 * n3 + 41.0 / 180.0 * n4 - 127.0 / 288.0 * n5 + 7891.0 / 37800.0 * n6;
        q.alpha[1] = 13.0 / 48.0 * n2 - 3.0 / 5.0 * n3 + 557.0 / 1440.0 * n4 + 281.0 / 630.0 * n5 - 1983433.0 / 1935360.0 * n6;
        q.alpha[2] = 61.0 / 240.0 * n3 - 103.0 / 140.0 * n4 + 15061.0 / 26880.0 * n5 + 167603.0 / 181440.0 * n6;
        q.alpha[3] = 49561.0 / 161280.0 * n4 - 179.0 / 168.0 * n5 + 6601661.0 / 7257600.0 * n6;
        q.alpha[4] = 34729.0 / 80640.0 * n5 - 3418889.0 / 1995840.0 * n6;
        q.alpha[5] = 212378941.0 / 319334400.0 * n6;
        q.beta[0] = n / 2.0 - 2.0 / 3.0 * n2 + 37.0 / 96.0 * n3 - 1.0 / 360.0 * n4 - 81.0 / 512.0 * n5 + 96199.0 / 604800.0 * n6;
        q.beta[1] = n2 / 48.0 + n3 / 15.0 - 437.0 / 1440.0 * n4 + 46.0 / 105.0 * n5 - 1118711.0 / 3870720.0 * n6;
        q.beta[2] = 17.0 / 480.0 * n3 - 37.0 / 840.0 * n4 - 209.0 / 4480.0 * n5 + 5569.0 / 90720.0 * n6;
        q.beta[3] = 4397.0 / 161280.0 * n4 - 11.0 / 504.0 * n5 - 830251.0 / 7257600.0 * n6;
        q.beta[4] = 4583.0 / 161280.0 * n5 - 108847.0 / 3991680.0 * n6;
        q.beta[5] = 20648693.0 / 638668800.0 * n6;
        return q;
    }();
    return s;
}

double taupf(double tau, double e) {
    const double tau1 = std::hypot(1.0, tau);
    const double sig = std::sinh(e * std::atanh(e * tau / tau1));
    return std::hypot(1.0, sig) * tau - sig * tau1;
}

// Inverse of taupf by Newton iteration (GeographicLib's tauf).
double tauf(double taup, double e) {
    const double e2m = 1.0 - e * e;
    double tau = taup / e2m;
    const double stol = 1e-13 * std::max(1.0, std::fabs(taup));
    for (int i = 0; i < 8; ++i) {
        const double taupa = taupf(tau, e);
        const double dtau = (taup - taupa) * (1.0 + e2m * tau * tau) /
                            (e2m * std::hypot(1.0, tau) * std::hypot(1.0, taupa));
        tau += dtau;
        if (std::fabs(dtau) < stol) break;
    }
    return tau;
}

}  // namespace

UtmZone parse_utm_zone(const std::string& text) {
    if (text.size() < 2) throw ValidationError("utm_zone: expected e.g. \"17N\", got \"" + text + "\"");
    const char hemi = static_cast<char>(std::toupper(static_cast<unsigned char>(text.back())));
    if (hemi != 'N' && hemi != 'S')
        throw ValidationError("utm_zone: hemisphere must be N or S in \"" + text + "\"");
    int number = 0;
    try {
        number = std::stoi(text.substr(0, text.size() - 1));
    } catch (const std::exception&) {
        throw ValidationError("utm_zone: bad zone number in \"" + text + "\"");
    }
    if (number < 1 || number > 60)
        throw ValidationError("utm_zone: zone number out of range in \"" + text + "\"");
    return UtmZone{number, hemi == 'N'};
}

std::pair<double, double> geodetic_to_utm(double lat_deg, double lon_deg, const UtmZone& zone) {
    const Series& s = series();
    const double phi = lat_deg * kDeg;
    double dlon = lon_deg - zone.central_meridian_deg();
    while (dlon > 180.0) dlon -= 360.0;
    while (dlon < -180.0) dlon += 360.0;
    const double lam = dlon * kDeg;

    const double taup = taupf(std::tan(phi), s.e);
    const double xip = std::atan2(taup, std::cos(lam));
    const double etap = std::asinh(std::sin(lam) / std::hypot(taup, std::cos(lam)));

    double xi = xip, eta = etap;
    for (int j = 0; j < 6; ++j) {
        const double arg = 2.0 * (j + 1);
        xi += s.alpha[j] * std::sin(arg * xip) * std::cosh(arg * etap);
        eta += s.alpha[j] * std::cos(arg * xip) * std::sinh(arg * etap);
    }

    const double easting = kFalseEasting + kK0 * s.aCap * eta;
    double northing = kK0 * s.aCap * xi;
    if (!zone.northern) northing += kFalseNorthingSouth;
    return {easting, northing};
}

std::pair<double, double> utm_to_geodetic(double easting, double northing, const UtmZone& zone) {
    const Series& s = series();
    double y = northing;
    if (!zone.northern) y -= kFalseNorthingSouth;
    const double xi = y / (kK0 * s.aCap);
    const double eta = (easting - kFalseEasting) / (kK0 * s.aCap);

    double xip = xi, etap = eta;
    for (int j = 0; j < 6; ++j) {
        const double arg = 2.0 * (j + 1);
        xip -= s.beta[j] * std::sin(arg * xi) * std::cosh(arg * eta);
        etap -= s.beta[j] * std::cos(arg * xi) * std::sinh(arg * eta);
    }

    const double taup = std::sin(xip) / std::hypot(std::sinh(etap), std::cos(xip));
    const double lam = std::atan2(std::sinh(etap), std::cos(xip));
    const double tau = tauf(taup, s.e);

    const double lat = std::atan(tau) / kDeg;
    double lon = zone.central_meridian_deg() + lam / kDeg;
    if (lon > 180.0) lon -= 360.0;
    if (lon < -180.0) lon += 360.0;
    return {lat, lon};
}

}  // namespace satsurf
