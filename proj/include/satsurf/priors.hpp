#pragma once

#include <span>
#include <vector>

#include "satsurf/geometry.hpp"
#include "satsurf/image_io.hpp"

namespace satsurf {

// One triangulated ground point observed in an image. Pixel coordinates may be
// fractional; depth reparameterization rounds them to the pixel grid.
struct SparseObservation {
    double u = 0, v = 0;
    double lon = 0, lat = 0, alt = 0;
    double reproj_error = 0;
};

std::vector<SparseObservation> read_sparse_csv(const std::filesystem::path& file);
void write_sparse_csv(const std::filesystem::path& file, std::span<const SparseObservation> obs);

// Distance (canonical units) between the point's position on its pixel ray and
// the ray's start on the upper reference plane, both recovered by localization
// at the rounded pixel.
double reparameterize_sparse_depth(const SparseObservation& obs, const RpcModel& model,
                                   const SceneBounds& bounds);

// Normalized fit confidences from reprojection errors:
// clamp(1 - e / e95, 0.05, 1) with e95 the 95th-percentile error.
std::vector<double> fit_weights_from_reproj(std::span<const double> reproj_errors);

// Conventional minimizes sum w_i (D_i - s R_i - o)^2; Literal keeps the paper
// form sum (w_i D_i - s R_i - o)^2 with the weight scaling the target.
enum class FitForm { Conventional, Literal };

struct FitResult {
    double scale = 1, offset = 0;
    double residual_mean = 0, residual_median = 0;
    int n_points = 0;
};

// Closed-form weighted 2x2 normal equations. Throws DegenerateFitError when
// the weighted variance of the relative depths is below 1e-12.
FitResult fit_scale_offset(std::span<const double> sparse_depth,
                           std::span<const double> relative,
                           std::span<const double> weight,
                           FitForm form = FitForm::Conventional);

// Unit normals of the depth-as-height-field plus the per-pixel mean-cosine
// consistency target over the 4-neighborhood.
struct NormalMap {
    int width = 0, height = 0;
    std::vector<double> normals;  // 3 per pixel
    std::vector<float> delta;     // in [-1, 1]

    Vec3 normal(int u, int v) const {
        const std::size_t i = (static_cast<std::size_t>(u) * width + v) * 3;
        return {normals[i], normals[i + 1], normals[i + 2]};
    }
    void set_normal(int u, int v, const Vec3& n) {
        const std::size_t i = (static_cast<std::size_t>(u) * width + v) * 3;
        normals[i] = n.x();
        normals[i + 1] = n.y();
        normals[i + 2] = n.z();
    }
};

// n proportional to (-dD/du, -dD/dv, 1); central differences in the interior,
// one-sided on borders. Flat regions give (0, 0, 1).
NormalMap normals_from_depth(const FloatImage& relative, double pixel_pitch = 1.0);

// Mean cosine against in-bounds 4-neighbors.
double gt_consistency(const NormalMap& map, int u, int v);

struct FusedDepthMap {
    FloatImage relative;   // min-max normalized to [0,1] over valid pixels
    FloatImage absolute;   // scale * relative + offset, elementwise
    std::vector<std::uint8_t> mask;  // 1 = enters losses
    FitResult fit;
    int dropped_observations = 0;
};

// Normalizes the raw relative map, reparameterizes the sparse observations
// (dropping ones whose localization fails, with a warning), fits scale/offset
// and assembles the fused map. valid_mask combines the water mask with
// relative-depth validity; pass empty for all-valid.
FusedDepthMap fuse_depth(const FloatImage& relative_raw,
                         std::span<const std::uint8_t> valid_mask,
                         std::span<const SparseObservation> obs, const RpcModel& model,
                         const SceneBounds& bounds, FitForm form = FitForm::Conventional);

}  // namespace satsurf
