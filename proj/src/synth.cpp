#include "satsurf/synth.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>

namespace satsurf {

namespace {

std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double box_sdf(const Vec3& p, const Vec3& center, const Vec3& half) {
    const Vec3 q = (p - center).cwiseAbs() - half;
    const Vec3 outside = q.cwiseMax(0.0);
    return outside.norm() + std::min(q.maxCoeff(), 0.0);
}

}  // namespace

void SynthScene::finalize() {
    const UtmZone zone = parse_utm_zone(utm_zone);
    auto [e, n] = geodetic_to_utm(lat_min, lon_min, zone);
    anchor_easting = e;
    anchor_northing = n;
}

SceneBounds SynthScene::bounds() const {
    const UtmZone zone = parse_utm_zone(utm_zone);
    // lat/lon box of the UTM rectangle via its four corners
    double lat_lo = 90, lat_hi = -90, lon_lo = 180, lon_hi = -180;
    for (int i = 0; i < 4; ++i) {
        const double e = anchor_easting + (i & 1 ? extent_east : 0.0);
        const double n = anchor_northing + (i & 2 ? extent_north : 0.0);
        auto [lat, lon] = utm_to_geodetic(e, n, zone);
        lat_lo = std::min(lat_lo, lat);
        lat_hi = std::max(lat_hi, lat);
        lon_lo = std::min(lon_lo, lon);
        lon_hi = std::max(lon_hi, lon);
    }
    return SceneBounds(lat_lo, lat_hi, lon_lo, lon_hi, alt_ref_lower, alt_ref_upper, zone);
}

double SynthScene::sdf(const Vec3& utm) const {
    double d = utm.z() - ground_altitude;  // ground plane
    for (const auto& b : boxes) {
        const Vec3 center(anchor_easting + b.cx, anchor_northing + b.cy,
                          ground_altitude + b.height / 2);
        d = std::min(d, box_sdf(utm, center, {b.sx / 2, b.sy / 2, b.height / 2}));
    }
    for (const auto& s : spheres) {
        const Vec3 center(anchor_easting + s.cx, anchor_northing + s.cy,
                          ground_altitude + s.cz);
        d = std::min(d, (utm - center).norm() - s.radius);
    }
    return d;
}

double SynthScene::albedo_at(const Vec3& utm) const {
    double best = std::fabs(utm.z() - ground_altitude);
    double albedo = ground_albedo;
    for (const auto& b : boxes) {
        const Vec3 center(anchor_easting + b.cx, anchor_northing + b.cy,
                          ground_altitude + b.height / 2);
        const double d = std::fabs(box_sdf(utm, center, {b.sx / 2, b.sy / 2, b.height / 2}));
        if (d < best) {
            best = d;
            albedo = b.albedo;
        }
    }
    for (const auto& s : spheres) {
        const Vec3 center(anchor_easting + s.cx, anchor_northing + s.cy, ground_altitude + s.cz);
        const double d = std::fabs((utm - center).norm() - s.radius);
        if (d < best) {
            best = d;
            albedo = s.albedo;
        }
    }
    return albedo;
}

double SynthScene::height_at(double easting, double northing) const {
    double h = ground_altitude;
    const double e = easting - anchor_easting;
    const double n = northing - anchor_northing;
    for (const auto& b : boxes)
        if (std::fabs(e - b.cx) <= b.sx / 2 && std::fabs(n - b.cy) <= b.sy / 2)
            h = std::max(h, ground_altitude + b.height);
    for (const auto& s : spheres) {
        const double rho2 = (e - s.cx) * (e - s.cx) + (n - s.cy) * (n - s.cy);
        if (rho2 <= s.radius * s.radius)
            h = std::max(h, ground_altitude + s.cz + std::sqrt(s.radius * s.radius - rho2));
    }
    return h;
}

bool SynthScene::in_water(double easting, double northing) const {
    if (!water_rect) return false;
    const double e = easting - anchor_easting;
    const double n = northing - anchor_northing;
    const auto& w = *water_rect;
    return e >= w[0] && n >= w[1] && e <= w[2] && n <= w[3];
}

SynthScene load_scene(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("scene: cannot open " + file.string());
    SynthScene sc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("scene: expected key = value at line " +
                                  std::to_string(lineno) + " of " + file.string());
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        std::istringstream vs(value);
        if (key == "lat_min") vs >> sc.lat_min;
        else if (key == "lon_min") vs >> sc.lon_min;
        else if (key == "extent_east_m") vs >> sc.extent_east;
        else if (key == "extent_north_m") vs >> sc.extent_north;
        else if (key == "utm_zone") vs >> sc.utm_zone;
        else if (key == "ground_altitude_m") vs >> sc.ground_altitude;
        else if (key == "alt_ref_lower_m") vs >> sc.alt_ref_lower;
        else if (key == "alt_ref_upper_m") vs >> sc.alt_ref_upper;
        else if (key == "ground_albedo") vs >> sc.ground_albedo;
        else if (key == "n_views") vs >> sc.n_views;
        else if (key == "image_width") vs >> sc.image_width;
        else if (key == "image_height") vs >> sc.image_height;
        else if (key == "min_off_nadir_deg") vs >> sc.min_off_nadir_deg;
        else if (key == "max_off_nadir_deg") vs >> sc.max_off_nadir_deg;
        else if (key == "camera_distance_m") vs >> sc.camera_distance;
        else if (key == "sun_elevation_min_deg") vs >> sc.sun_elevation_min_deg;
        else if (key == "sun_elevation_max_deg") vs >> sc.sun_elevation_max_deg;
        else if (key == "ambient") vs >> sc.ambient;
        else if (key == "exposure_jitter") vs >> sc.exposure_jitter;
        else if (key == "pixel_noise_sigma") vs >> sc.pixel_noise_sigma;
        else if (key == "sparse_points_per_view") vs >> sc.sparse_points_per_view;
        else if (key == "sparse_pixel_sigma_px") vs >> sc.sparse_pixel_sigma_px;
        else if (key == "depth_warp") vs >> sc.depth_warp;
        else if (key == "dsm_cell_size_m") vs >> sc.dsm_cell_size;
        else if (key == "box") {
            BoxPrimitive b;
            if (!(vs >> b.cx >> b.cy >> b.sx >> b.sy >> b.height >> b.albedo))
                throw ValidationError("scene: box needs 'cx cy sx sy height albedo' at line " +
                                      std::to_string(lineno));
            sc.boxes.push_back(b);
        } else if (key == "sphere") {
            SpherePrimitive s;
            if (!(vs >> s.cx >> s.cy >> s.cz >> s.radius >> s.albedo))
                throw ValidationError("scene: sphere needs 'cx cy cz r albedo' at line " +
                                      std::to_string(lineno));
            sc.spheres.push_back(s);
        } else if (key == "water_rect") {
            std::array<double, 4> w{};
            if (!(vs >> w[0] >> w[1] >> w[2] >> w[3]))
                throw ValidationError("scene: water_rect needs 'e0 n0 e1 n1' at line " +
                                      std::to_string(lineno));
            sc.water_rect = w;
        } else {
            throw ValidationError("scene: unknown key '" + key + "' in " + file.string());
        }
    }
    if (sc.n_views < 2) throw ValidationError("scene: n_views must be >= 2");
    if (sc.alt_ref_upper <= sc.alt_ref_lower)
        throw ValidationError("scene: alt_ref_upper must exceed alt_ref_lower");
    for (const auto& b : sc.boxes) {
        if (b.cx - b.sx / 2 < 0 || b.cx + b.sx / 2 > sc.extent_east || b.cy - b.sy / 2 < 0 ||
            b.cy + b.sy / 2 > sc.extent_north ||
            sc.ground_altitude + b.height > sc.alt_ref_upper)
            throw ValidationError("scene: box extends outside the scene bounds");
    }
    for (const auto& s2 : sc.spheres) {
        if (s2.cx - s2.radius < 0 || s2.cx + s2.radius > sc.extent_east ||
            s2.cy - s2.radius < 0 || s2.cy + s2.radius > sc.extent_north ||
            sc.ground_altitude + s2.cz + s2.radius > sc.alt_ref_upper)
            throw ValidationError("scene: sphere extends outside the scene bounds");
    }
    sc.finalize();
    return sc;
}

RpcModel fit_rpc(const std::function<Vec2(double lon, double lat, double alt)>& projection,
                 double lat_min, double lat_max, double lon_min, double lon_max, double alt_min,
                 double alt_max, int grid_lat, int grid_lon, int grid_alt,
                 double max_residual_px, double* residual_out) {
    RpcModel m;
    m.lat_off = (lat_min + lat_max) / 2;
    m.lat_scale = (lat_max - lat_min) / 2;
    m.lon_off = (lon_min + lon_max) / 2;
    m.lon_scale = (lon_max - lon_min) / 2;
    m.alt_off = (alt_min + alt_max) / 2;
    m.alt_scale = (alt_max - alt_min) / 2;

    struct Sample {
        double x, y, z;  // normalized lon, lat, alt
        Vec2 px;         // (line, samp)
    };
    auto make_grid = [&](int nl, int no, int na, double shift) {
        std::vector<Sample> samples;
        samples.reserve(std::size_t(nl) * no * na);
        for (int i = 0; i < nl; ++i) {
            const double lat = lat_min + (lat_max - lat_min) * (i + shift) / (nl - 1 + 2 * shift);
            for (int j = 0; j < no; ++j) {
                const double lon =
                    lon_min + (lon_max - lon_min) * (j + shift) / (no - 1 + 2 * shift);
                for (int k = 0; k < na; ++k) {
                    const double alt =
                        alt_min + (alt_max - alt_min) * (k + shift) / (na - 1 + 2 * shift);
                    Sample s;
                    s.x = (lon - m.lon_off) / m.lon_scale;
                    s.y = (lat - m.lat_off) / m.lat_scale;
                    s.z = (alt - m.alt_off) / m.alt_scale;
                    s.px = projection(lon, lat, alt);
                    samples.push_back(s);
                }
            }
        }
        return samples;
    };

    const std::vector<Sample> fitting = make_grid(grid_lat, grid_lon, grid_alt, 0.0);

    double line_lo = 1e300, line_hi = -1e300, samp_lo = 1e300, samp_hi = -1e300;
    for (const auto& s : fitting) {
        line_lo = std::min(line_lo, s.px[0]);
        line_hi = std::max(line_hi, s.px[0]);
        samp_lo = std::min(samp_lo, s.px[1]);
        samp_hi = std::max(samp_hi, s.px[1]);
    }
    m.line_off = (line_lo + line_hi) / 2;
    m.line_scale = std::max((line_hi - line_lo) / 2, 1.0);
    m.samp_off = (samp_lo + samp_hi) / 2;
    m.samp_scale = std::max((samp_hi - samp_lo) / 2, 1.0);

    // linear system for one rational channel: num(t) - target * den_tail(t) = target
    auto solve_channel = [&](int channel, std::array<double, 20>& num,
                             std::array<double, 20>& den) {
        const int rows = static_cast<int>(fitting.size());
        MatrixXd A(rows, 39);
        VectorXd b(rows);
        for (int r = 0; r < rows; ++r) {
            const auto t = rpc_terms(fitting[r].x, fitting[r].y, fitting[r].z);
            const double target = channel == 0
                                      ? (fitting[r].px[0] - m.line_off) / m.line_scale
                                      : (fitting[r].px[1] - m.samp_off) / m.samp_scale;
            for (int c = 0; c < 20; ++c) A(r, c) = t[c];
            for (int c = 1; c < 20; ++c) A(r, 19 + c) = -target * t[c];
            b(r) = target;
        }
        const VectorXd sol = A.colPivHouseholderQr().solve(b);
        for (int c = 0; c < 20; ++c) num[c] = sol(c);
        den[0] = 1.0;
        for (int c = 1; c < 20; ++c) den[c] = sol(19 + c);
    };
    solve_channel(0, m.line_num, m.line_den);
    solve_channel(1, m.samp_num, m.samp_den);

    // held-out validation on a half-cell-offset grid
    const std::vector<Sample> held_out =
        make_grid(grid_lat - 1, grid_lon - 1, grid_alt - 1, 0.5);
    double max_err = 0;
    for (const auto& s : held_out) {
        const double lon = m.lon_off + s.x * m.lon_scale;
        const double lat = m.lat_off + s.y * m.lat_scale;
        const double alt = m.alt_off + s.z * m.alt_scale;
        const Vec2 p = rpc_project(m, lon, lat, alt);
        max_err = std::max(max_err, (p - s.px).cwiseAbs().maxCoeff());
    }
    if (residual_out) *residual_out = max_err;
    if (max_err > max_residual_px)
        throw RpcFitFailedError("fit_rpc: held-out residual " + std::to_string(max_err) +
                                " px exceeds " + std::to_string(max_residual_px));
    return m;
}

namespace {

struct Pinhole {
    Vec3 center;
    Eigen::Matrix3d rot;  // rows: image x (samp), image y (line), forward
    double focal = 0, cu = 0, cv = 0;

    // returns (line, samp)
    Vec2 project(const Vec3& p) const {
        const Vec3 pc = rot * (p - center);
        return {focal * pc.y() / pc.z() + cu, focal * pc.x() / pc.z() + cv};
    }
};

Pinhole make_camera(const SynthScene& sc, double az_deg, double off_nadir_deg) {
    const double az = az_deg * M_PI / 180.0;
    const double off = off_nadir_deg * M_PI / 180.0;
    const Vec3 look_at(sc.anchor_easting + sc.extent_east / 2,
                       sc.anchor_northing + sc.extent_north / 2, sc.ground_altitude);
    const Vec3 offset(std::sin(az) * std::sin(off), std::cos(az) * std::sin(off), std::cos(off));
    Pinhole cam;
    cam.center = look_at + sc.camera_distance * offset;
    const Vec3 forward = (look_at - cam.center).normalized();
    Vec3 right = forward.cross(Vec3::UnitZ());
    if (right.norm() < 1e-9) right = Vec3::UnitX();
    right.normalize();
    const Vec3 down = forward.cross(right).normalized();
    cam.rot.row(0) = right.transpose();
    cam.rot.row(1) = down.transpose();
    cam.rot.row(2) = forward.transpose();
    const double extent = std::max(sc.extent_east, sc.extent_north);
    cam.focal = std::min(sc.image_width, sc.image_height) * sc.camera_distance / (1.6 * extent);
    cam.cu = (sc.image_height - 1) / 2.0;
    cam.cv = (sc.image_width - 1) / 2.0;
    return cam;
}

// sphere tracing along a canonical ray against the metric SDF
bool trace_ray(const SynthScene& sc, const SceneBounds& bounds, const Ray& ray, double* t_hit) {
    const Vec3 scales = bounds.axis_scales_m();
    const double metres_per_t = ray.dir.cwiseProduct(scales).norm();
    double t = 0;
    for (int iter = 0; iter < 512; ++iter) {
        const Vec3 utm = bounds.utm_from_canonical(ray.point(t));
        const double d = sc.sdf(utm);
        if (d < 1e-4) {
            *t_hit = t;
            return true;
        }
        t += 0.999 * d / metres_per_t;
        if (t > ray.t_far * 1.5) return false;
    }
    *t_hit = t;
    return sc.sdf(bounds.utm_from_canonical(ray.point(t))) < 1e-2;
}

Vec3 scene_normal(const SynthScene& sc, const Vec3& utm) {
    const double h = 1e-3;
    Vec3 n;
    for (int k = 0; k < 3; ++k) {
        Vec3 a = utm, b = utm;
        a[k] += h;
        b[k] -= h;
        n[k] = sc.sdf(a) - sc.sdf(b);
    }
    const double norm = n.norm();
    return norm > 0 ? Vec3(n / norm) : Vec3::UnitZ();
}

// depth value consistent with the sparse reparameterization: both endpoints
// recovered by localization at the integer pixel
double localize_depth(const RpcModel& rpc, const SceneBounds& bounds, int u, int v, double alt) {
    const Vec2 at_point = rpc_localize(rpc, u, v, alt);
    const Vec2 at_ref = rpc_localize(rpc, u, v, bounds.alt_ref_upper());
    const Vec3 p = bounds.canonical_from_geodetic(at_point[0], at_point[1], alt, 10.0);
    const Vec3 r =
        bounds.canonical_from_geodetic(at_ref[0], at_ref[1], bounds.alt_ref_upper(), 10.0);
    return (p - r).norm();
}

}  // namespace

SynthResult generate_dataset(const SynthScene& scene, const std::filesystem::path& out_dir,
                             std::uint64_t seed) {
    if (scene.n_views < 2) throw ValidationError("generate_dataset: n_views must be >= 2");
    const SceneBounds bounds = scene.bounds();
    const UtmZone zone = parse_utm_zone(scene.utm_zone);
    const int W = scene.image_width, H = scene.image_height;

    namespace fs = std::filesystem;
    for (const char* sub : {"images", "rpc", "depth", "sparse", "masks"})
        fs::create_directories(out_dir / sub);

    Manifest manifest;
    manifest.lat_min = bounds.lat_min();
    manifest.lat_max = bounds.lat_max();
    manifest.lon_min = bounds.lon_min();
    manifest.lon_max = bounds.lon_max();
    manifest.alt_ref_lower = bounds.alt_ref_lower();
    manifest.alt_ref_upper = bounds.alt_ref_upper();
    manifest.utm_zone = zone.str();

    SynthResult result;

    for (int view = 0; view < scene.n_views; ++view) {
        RngStream rng(derive_seed(seed, 0x5CE7E, view));
        const double az = 360.0 * view / scene.n_views + rng.uniform(-10.0, 10.0);
        const double off = rng.uniform(scene.min_off_nadir_deg, scene.max_off_nadir_deg);
        const double sun_az = rng.uniform(0.0, 360.0);
        const double sun_el = rng.uniform(scene.sun_elevation_min_deg, scene.sun_elevation_max_deg);
        const double gain = 1.0 + rng.uniform(-scene.exposure_jitter, scene.exposure_jitter);

        const Pinhole cam = make_camera(scene, az, off);
        SynthViewInfo info;
        info.sun_azimuth_deg = sun_az;
        info.sun_elevation_deg = sun_el;

        const RpcModel rpc = fit_rpc(
            [&](double lon, double lat, double alt) {
                auto [e, n] = geodetic_to_utm(lat, lon, zone);
                return cam.project(Vec3(e, n, alt));
            },
            bounds.lat_min(), bounds.lat_max(), bounds.lon_min(), bounds.lon_max(),
            bounds.alt_ref_lower(), bounds.alt_ref_upper(), 20, 20, 10, 0.05,
            &info.rpc_residual_px);

        const double sun_az_r = sun_az * M_PI / 180.0, sun_el_r = sun_el * M_PI / 180.0;
        const Vec3 sun_enu(std::sin(sun_az_r) * std::cos(sun_el_r),
                           std::cos(sun_az_r) * std::cos(sun_el_r), std::sin(sun_el_r));

        // per-pixel trace: shaded color, localized depth, surface altitude
        ImageU8 img;
        img.width = W;
        img.height = H;
        img.channels = 3;
        img.data.resize(std::size_t(W) * H * 3);
        ImageU8 mask;
        mask.width = W;
        mask.height = H;
        mask.channels = 1;
        mask.data.assign(std::size_t(W) * H, 255);
        FloatImage depth(W, H);
        std::vector<double> surface_alt(std::size_t(W) * H);
        std::vector<double> pixel_noise(std::size_t(W) * H * 3);
        for (auto& x : pixel_noise) x = scene.pixel_noise_sigma > 0
                                            ? rng.normal() * scene.pixel_noise_sigma
                                            : 0.0;

        std::vector<std::uint8_t> hit_ok(std::size_t(W) * H, 0);
        parallel_for(std::int64_t(W) * H, [&](std::int64_t i, int) {
            const int u = static_cast<int>(i) / W;
            const int v = static_cast<int>(i) % W;
            const Ray ray = make_ray(rpc, u, v, bounds);
            double t_hit = 0;
            if (!trace_ray(scene, bounds, ray, &t_hit)) return;
            hit_ok[i] = 1;
            const Vec3 utm = bounds.utm_from_canonical(ray.point(t_hit));
            surface_alt[i] = utm.z();
            depth.data[i] = static_cast<float>(
                localize_depth(rpc, bounds, u, v, std::clamp(utm.z(), bounds.alt_ref_lower(),
                                                             bounds.alt_ref_upper())));
            const Vec3 n = scene_normal(scene, utm);
            const double lambert = std::max(0.0, n.dot(sun_enu));
            const double shade =
                scene.albedo_at(utm) * (scene.ambient + (1.0 - scene.ambient) * lambert) * gain;
            // slight fixed tint keeps the three channels distinct
            const double tint[3] = {1.0, 0.97, 0.92};
            for (int c = 0; c < 3; ++c) {
                const double val = shade * tint[c] + pixel_noise[i * 3 + c];
                img.data[i * 3 + c] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(val, 0.0, 1.0) * 255.0));
            }
            if (scene.in_water(utm.x(), utm.y())) mask.data[i] = 0;
        });
        for (std::size_t i = 0; i < hit_ok.size(); ++i)
            if (!hit_ok[i])
                throw RuntimeFailure("generate_dataset: ray missed the scene; widen the slab");

        // oracle relative depth: affine normalization (optionally warped)
        float dlo = depth.data[0], dhi = depth.data[0];
        for (float d : depth.data) {
            dlo = std::min(dlo, d);
            dhi = std::max(dhi, d);
        }
        FloatImage rel(W, H);
        if (dhi - dlo > 1e-12f) {
            info.depth_scale = dhi - dlo;
            info.depth_offset = dlo;
            for (std::size_t i = 0; i < rel.data.size(); ++i)
                rel.data[i] = (depth.data[i] - dlo) / (dhi - dlo);
            if (scene.depth_warp > 0) {
                for (auto& r : rel.data) {
                    const double x = r;
                    r = static_cast<float>(x + scene.depth_warp * x * (1 - x));
                }
            }
        } else {
            // constant depth: the relative map stays zero and the offset
            // carries the whole value
            info.depth_scale = dhi - dlo;
            info.depth_offset = dlo;
        }

        // sparse observations at integer pixels, optionally jittered
        std::vector<SparseObservation> sparse;
        sparse.reserve(scene.sparse_points_per_view);
        for (int k = 0; k < scene.sparse_points_per_view; ++k) {
            const int u = 1 + static_cast<int>(rng.index(H - 2));
            const int v = 1 + static_cast<int>(rng.index(W - 2));
            const std::size_t pix = std::size_t(u) * W + v;
            SparseObservation obs;
            double du = 0, dv = 0;
            if (scene.sparse_pixel_sigma_px > 0) {
                du = rng.normal() * scene.sparse_pixel_sigma_px;
                dv = rng.normal() * scene.sparse_pixel_sigma_px;
            }
            obs.u = u + du;
            obs.v = v + dv;
            obs.alt = surface_alt[pix];
            const Vec2 lonlat = rpc_localize(rpc, u, v, obs.alt);
            obs.lon = lonlat[0];
            obs.lat = lonlat[1];
            obs.reproj_error = std::hypot(du, dv);
            sparse.push_back(obs);
        }

        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d", view);
        ImageEntry entry;
        entry.image = out_dir / "images" / (std::string(name) + ".png");
        entry.rpc = out_dir / "rpc" / (std::string(name) + ".rpc");
        entry.depth = out_dir / "depth" / (std::string(name) + ".pfm");
        entry.sparse = out_dir / "sparse" / (std::string(name) + ".csv");
        entry.mask = out_dir / "masks" / (std::string(name) + ".png");
        entry.sun_azimuth_deg = sun_az;
        entry.sun_elevation_deg = sun_el;
        write_png(entry.image, img);
        rpc.save(entry.rpc);
        write_pfm(entry.depth, rel);
        write_sparse_csv(entry.sparse, sparse);
        write_png(entry.mask, mask);
        manifest.images.push_back(entry);
        result.views.push_back(info);
    }

    // exact ground-truth DSM over the scene rectangle
    DsmSpec spec;
    spec.cell = scene.dsm_cell_size;
    spec.x0 = scene.anchor_easting;
    spec.y0 = scene.anchor_northing;
    spec.width = static_cast<int>(std::lround(scene.extent_east / spec.cell));
    spec.height = static_cast<int>(std::lround(scene.extent_north / spec.cell));
    Dsm gt(spec);
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c)
            gt.heights(r, c) = scene.height_at(spec.cell_center_x(c), spec.cell_center_y(r));
    result.gt_dsm = out_dir / "gt_dsm.asc";
    write_dsm_asc(gt, result.gt_dsm);

    result.manifest = out_dir / "manifest.txt";
    manifest.save(result.manifest);
    return result;
}

}  // namespace satsurf
