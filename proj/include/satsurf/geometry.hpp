#pragma once

#include "satsurf/common.hpp"
#include "satsurf/rpc.hpp"
#include "satsurf/utm.hpp"

namespace satsurf {

// The scene slab between the two altitude reference planes, with the per-axis
// affine map from its UTM bounding box onto the canonical cube [-1,1]^3.
// Canonical axes: x = easting, y = northing, z = altitude; alt_ref_upper maps
// to z = +1, alt_ref_lower to z = -1.
class SceneBounds {
public:
    SceneBounds(double lat_min, double lat_max, double lon_min, double lon_max,
                double alt_ref_lower, double alt_ref_upper, UtmZone zone);

    double lat_min() const { return lat_min_; }
    double lat_max() const { return lat_max_; }
    double lon_min() const { return lon_min_; }
    double lon_max() const { return lon_max_; }
    double alt_ref_lower() const { return alt_lo_; }
    double alt_ref_upper() const { return alt_hi_; }
    const UtmZone& zone() const { return zone_; }

    double easting_min() const { return e_min_; }
    double easting_max() const { return e_max_; }
    double northing_min() const { return n_min_; }
    double northing_max() const { return n_max_; }

    // metres per canonical unit along each axis
    Vec3 axis_scales_m() const;

    Vec3 canonical_from_utm(double easting, double northing, double alt_m) const;
    Vec3 utm_from_canonical(const Vec3& c) const;  // (easting, northing, alt)

    // Throws OutOfDomainError when a canonical coordinate exceeds 1 + margin.
    Vec3 canonical_from_geodetic(double lon_deg, double lat_deg, double alt_m,
                                 double margin = 0.5) const;
    // (lon, lat, alt)
    Vec3 geodetic_from_canonical(const Vec3& c) const;

private:
    double lat_min_, lat_max_, lon_min_, lon_max_;
    double alt_lo_, alt_hi_;
    UtmZone zone_;
    double e_min_, e_max_, n_min_, n_max_;
};

// A ray through the scene slab in canonical coordinates. The origin sits on
// the upper reference plane; t is arc length (canonical units), t_near = 0.
struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 dir = Vec3::UnitZ();
    double t_near = 0.0;
    double t_far = 0.0;

    Vec3 point(double t) const { return origin + t * dir; }
};

// Intersects the pixel's view ray with both reference planes and connects the
// two canonical points. Propagates localization errors.
Ray make_ray(const RpcModel& model, double u, double v, const SceneBounds& bounds);

}  // namespace satsurf
