#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satsurf/geometry.hpp"
#include "satsurf/image_io.hpp"
#include "satsurf/priors.hpp"

namespace satsurf {

struct ImageEntry {
    std::filesystem::path rpc;
    std::filesystem::path image;
    std::filesystem::path mask;    // optional
    std::filesystem::path depth;   // optional relative-depth PFM
    std::filesystem::path sparse;  // optional sparse-observation CSV
    double sun_azimuth_deg = 180.0;
    double sun_elevation_deg = 60.0;
};

// Text manifest: a key = value header (scene bounds) followed by one [image]
// section per view. Relative paths resolve against the manifest directory.
struct Manifest {
    double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;
    double alt_ref_lower = 0, alt_ref_upper = 0;
    std::string utm_zone = "1N";
    std::vector<ImageEntry> images;

    SceneBounds bounds() const;

    static Manifest load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;
};

// Sun direction pointing toward the sun: ENU metres, then rescaled into
// canonical axes and normalized.
Vec3 sun_direction_canonical(double azimuth_deg, double elevation_deg, const SceneBounds& bounds);

// One view loaded for training: supervision images plus precomputed per-pixel
// rays.
struct TrainView {
    RpcModel rpc;
    int width = 0, height = 0;
    std::vector<float> rgb;             // H*W*3 in [0,1]
    std::vector<std::uint8_t> mask;     // water/validity, 1 = valid
    bool has_depth = false;
    std::vector<float> fused_depth;     // canonical units
    std::vector<std::uint8_t> depth_valid;
    std::vector<float> delta_gt;        // consistency targets from relative depth
    std::vector<std::uint8_t> delta_valid;
    Vec3 sun_dir = Vec3::UnitZ();
    std::vector<Ray> rays;              // H*W

    const Ray& ray_at(int u, int v) const { return rays[std::size_t(u) * width + v]; }
};

struct Dataset {
    explicit Dataset(SceneBounds b) : bounds(std::move(b)) {}
    SceneBounds bounds;
    std::vector<TrainView> views;

    std::int64_t interior_pixels() const;  // pixels at least 1 px from borders
};

// Loads images, masks, fused depth maps (<fused_dir>/<image stem>.pfm when
// present) and consistency targets, and precomputes all pixel rays.
Dataset load_dataset(const Manifest& manifest, const std::filesystem::path& fused_dir);

}  // namespace satsurf
