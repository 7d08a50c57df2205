#pragma once

#include <functional>

#include "satsurf/common.hpp"
#include "satsurf/geometry.hpp"

namespace satsurf {

// Batched SDF query used by the sampler and marching cubes; fills f with one
// value per column of X.
using SdfBatchFn = std::function<void(const Matrix3Xd&, VectorXd&)>;

struct SamplerConfig {
    int n_total = 128;
    int rounds = 4;
    double s_base = 64.0;  // coarse bandwidth; doubled each importance round

    int n_uniform() const { return n_total / 2; }
    int per_round() const { return n_total / 8; }
    void validate() const;
};

// Stratified uniform samples followed by importance rounds drawn from the
// coarse alpha distribution with progressively doubled bandwidth; merged and
// sorted (strictly increasing t).
VectorXd sample_ray(const Ray& ray, const SdfBatchFn& sdf, const SamplerConfig& cfg,
                    RngStream& rng);

// alpha = max((Phi_s(f_i) - Phi_s(f_{i+1})) / Phi_s(f_i), 0)
double alpha_from_sdf(double f_i, double f_next, double s);

struct CompositeResult {
    Vec3 color = Vec3::Zero();
    double depth = 0.0;
    double weight_sum = 0.0;
    VectorXd weights;  // T_i * alpha_i
};

// Front-to-back compositing of per-sample alpha/color/t.
CompositeResult composite(const VectorXd& alphas, const Matrix3Xd& colors, const VectorXd& ts);

struct RenderResult {
    Vec3 color = Vec3::Zero();
    double depth = 0.0;
    double weight_sum = 0.0;
    VectorXd weights;
    Vec3 normal = Vec3::Zero();  // SDF gradient at origin + depth * dir
};

}  // namespace satsurf
