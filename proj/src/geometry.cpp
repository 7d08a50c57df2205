#include "satsurf/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace satsurf {

SceneBounds::SceneBounds(double lat_min, double lat_max, double lon_min, double lon_max,
                         double alt_ref_lower, double alt_ref_upper, UtmZone zone)
    : lat_min_(lat_min), lat_max_(lat_max), lon_min_(lon_min), lon_max_(lon_max),
      alt_lo_(alt_ref_lower), alt_hi_(alt_ref_upper), zone_(zone) {
    if (!(lat_min < lat_max) || !(lon_min < lon_max))
        throw ValidationError("SceneBounds: empty lat/lon box");
    if (!(alt_ref_upper > alt_ref_lower))
        throw ValidationError("SceneBounds: alt_ref_upper must exceed alt_ref_lower");

    // UTM box from the four graticule corners.
    e_min_ = n_min_ = std::numeric_limits<double>::infinity();
    e_max_ = n_max_ = -std::numeric_limits<double>::infinity();
    for (double lat : {lat_min, lat_max}) {
        for (double lon : {lon_min, lon_max}) {
            auto [e, n] = geodetic_to_utm(lat, lon, zone_);
            e_min_ = std::min(e_min_, e);
            e_max_ = std::max(e_max_, e);
            n_min_ = std::min(n_min_, n);
            n_max_ = std::max(n_max_, n);
        }
    }
    if (!(e_max_ > e_min_) || !(n_max_ > n_min_))
        throw ValidationError("SceneBounds: degenerate UTM box");
}

Vec3 SceneBounds::axis_scales_m() const {
    return {(e_max_ - e_min_) / 2.0, (n_max_ - n_min_) / 2.0, (alt_hi_ - alt_lo_) / 2.0};
}

Vec3 SceneBounds::canonical_from_utm(double easting, double northing, double alt_m) const {
    return {2.0 * (easting - e_min_) / (e_max_ - e_min_) - 1.0,
            2.0 * (northing - n_min_) / (n_max_ - n_min_) - 1.0,
            2.0 * (alt_m - alt_lo_) / (alt_hi_ - alt_lo_) - 1.0};
}

Vec3 SceneBounds::utm_from_canonical(const Vec3& c) const {
    return {e_min_ + (c.x() + 1.0) * 0.5 * (e_max_ - e_min_),
            n_min_ + (c.y() + 1.0) * 0.5 * (n_max_ - n_min_),
            alt_lo_ + (c.z() + 1.0) * 0.5 * (alt_hi_ - alt_lo_)};
}

Vec3 SceneBounds::canonical_from_geodetic(double lon_deg, double lat_deg, double alt_m,
                                          double margin) const {
    auto [e, n] = geodetic_to_utm(lat_deg, lon_deg, zone_);
    const Vec3 c = canonical_from_utm(e, n, alt_m);
    const double lim = 1.0 + margin;
    if (std::fabs(c.x()) > lim || std::fabs(c.y()) > lim || std::fabs(c.z()) > lim)
        throw OutOfDomainError("canonicalize: point outside the scene box");
    return c;
}

Vec3 SceneBounds::geodetic_from_canonical(const Vec3& c) const {
    const Vec3 u = utm_from_canonical(c);
    auto [lat, lon] = utm_to_geodetic(u.x(), u.y(), zone_);
    return {lon, lat, u.z()};
}

Ray make_ray(const RpcModel& model, double u, double v, const SceneBounds& bounds) {
    const Vec2 top = rpc_localize(model, u, v, bounds.alt_ref_upper());
    const Vec2 bot = rpc_localize(model, u, v, bounds.alt_ref_lower());
    // Rays may exit the lat/lon box laterally near image borders; the slab
    // clamp for field queries happens later, so use a wide margin here.
    const double wide = 10.0;
    const Vec3 origin = bounds.canonical_from_geodetic(top[0], top[1], bounds.alt_ref_upper(), wide);
    const Vec3 end = bounds.canonical_from_geodetic(bot[0], bot[1], bounds.alt_ref_lower(), wide);
    Ray ray;
    ray.origin = origin;
    ray.t_far = (end - origin).norm();
    if (ray.t_far <= 0.0) throw RuntimeFailure("make_ray: zero-length ray");
    ray.dir = (end - origin) / ray.t_far;
    ray.t_near = 0.0;
    return ray;
}

}  // namespace satsurf
