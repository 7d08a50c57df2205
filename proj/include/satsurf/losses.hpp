#pragma once

#include <span>

#include "satsurf/common.hpp"

namespace satsurf {

struct LossWeights {
    double depth = 0.1;    // lambda_1
    double normal = 0.1;   // lambda_2
    double eikonal = 0.1;  // lambda_3

    void validate() const {
        if (depth < 0 || normal < 0 || eikonal < 0)
            throw ValidationError("loss weights must be nonnegative");
    }
};

struct BatchLosses {
    double color = 0, depth = 0, normal = 0, eikonal = 0, total = 0;
    int rays = 0;             // batch size K
    int depth_rays = 0;       // unmasked depth terms
    int normal_pixels = 0;    // pixels passing the opacity gate
    long eikonal_samples = 0;

    double combine(const LossWeights& w) const {
        return color + w.depth * depth + w.normal * normal + w.eikonal * eikonal;
    }
};

// Mean over rays of the channel-summed L1 color difference.
double color_loss(const Matrix3Xd& rendered, const Matrix3Xd& truth);

// Mean over all gradients of (||g|| - 1)^2.
double eikonal_loss(std::span<const Vec3> gradients);

// (1/K) * sum_i mask_i * |rendered_i - target_i|, K = batch size (masked rays
// dilute the mean).
double depth_loss(std::span<const double> rendered, std::span<const double> target,
                  std::span<const std::uint8_t> mask);

// Mean cosine between a center gradient and its neighbors (predicted angular
// consistency of Eq. form; inputs need not be unit length).
double delta_pred(const Vec3& center, std::span<const Vec3> neighbors);

// (1/K) * sum (delta_pred - delta_gt)^2 over gated pixels.
double normal_loss(std::span<const double> pred, std::span<const double> gt);

double total_loss(const BatchLosses& parts, const LossWeights& w);

}  // namespace satsurf
