#pragma once

#include <optional>

#include "satsurf/dataset.hpp"
#include "satsurf/extract.hpp"

namespace satsurf {

struct BoxPrimitive {
    double cx = 0, cy = 0;       // footprint center, metres from the scene anchor
    double sx = 10, sy = 10;     // footprint extents
    double height = 10;          // above ground
    double albedo = 0.6;
};

struct SpherePrimitive {
    double cx = 0, cy = 0, cz = 0;  // center (cz above ground)
    double radius = 5;
    double albedo = 0.7;
};

// Analytic scene: a ground plane, boxes, optional spheres, parsed from a
// key = value description file with one `box = cx cy sx sy height albedo`
// (and optionally `sphere = cx cy cz r albedo`) line per primitive.
struct SynthScene {
    double lat_min = 0, lon_min = 0;       // anchor: southwest corner
    double extent_east = 128, extent_north = 128;
    std::string utm_zone = "17N";
    double ground_altitude = 0;
    double alt_ref_lower = -12, alt_ref_upper = 44;
    double ground_albedo = 0.35;

    int n_views = 8;
    int image_width = 96, image_height = 96;
    double min_off_nadir_deg = 4, max_off_nadir_deg = 22;
    double camera_distance = 2800;
    double sun_elevation_min_deg = 42, sun_elevation_max_deg = 68;
    double ambient = 0.25;
    double exposure_jitter = 0.15;
    double pixel_noise_sigma = 0.0;
    int sparse_points_per_view = 300;
    double sparse_pixel_sigma_px = 0.0;
    double depth_warp = 0.0;  // 0 keeps the oracle depth affine
    double dsm_cell_size = 0.5;

    std::vector<BoxPrimitive> boxes;
    std::vector<SpherePrimitive> spheres;
    std::optional<std::array<double, 4>> water_rect;  // e0 n0 e1 n1, metres from anchor

    // anchor in UTM metres
    double anchor_easting = 0, anchor_northing = 0;

    void finalize();  // computes the anchor; called by load_scene
    SceneBounds bounds() const;

    // exact signed distance (metres) in UTM coordinates
    double sdf(const Vec3& utm) const;
    // albedo of the closest primitive
    double albedo_at(const Vec3& utm) const;
    // analytic maximum-height field
    double height_at(double easting, double northing) const;
    bool in_water(double easting, double northing) const;
};

SynthScene load_scene(const std::filesystem::path& file);

struct SynthViewInfo {
    double depth_scale = 1, depth_offset = 0;  // oracle relative -> canonical depth
    double rpc_residual_px = 0;                // held-out validation maximum
    double sun_azimuth_deg = 0, sun_elevation_deg = 0;
};

struct SynthResult {
    std::filesystem::path manifest;
    std::filesystem::path gt_dsm;
    std::vector<SynthViewInfo> views;
};

// Writes images, RPC files, oracle relative depths, sparse observations,
// masks, the ground-truth DSM and the manifest under out_dir.
// Byte-deterministic for a fixed (scene, seed).
SynthResult generate_dataset(const SynthScene& scene, const std::filesystem::path& out_dir,
                             std::uint64_t seed);

// Least-squares rational-cubic fit of an arbitrary ground-to-image projection
// over a lat/lon/alt grid; validates on a half-cell-offset grid and throws
// RpcFitFailedError above max_residual_px.
RpcModel fit_rpc(const std::function<Vec2(double lon, double lat, double alt)>& projection,
                 double lat_min, double lat_max, double lon_min, double lon_max, double alt_min,
                 double alt_max, int grid_lat = 20, int grid_lon = 20, int grid_alt = 10,
                 double max_residual_px = 0.05, double* residual_out = nullptr);

}  // namespace satsurf
