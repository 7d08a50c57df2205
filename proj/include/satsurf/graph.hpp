#pragma once

#include <array>

#include "satsurf/field.hpp"
#include "satsurf/losses.hpp"
#include "satsurf/render.hpp"

namespace satsurf {

// Supervision attached to one sampled pixel.
struct PixelSupervision {
    Vec3 color = Vec3::Zero();
    double depth = 0.0;
    bool depth_valid = false;   // water/validity mask M
    double delta_gt = 1.0;
    bool normal_valid = false;  // a consistency target exists for this pixel
    Vec3 sun_dir = Vec3::UnitZ();
    int image = 0;
    int u = 0, v = 0;
};

// Center ray plus its 4-neighborhood (up, down, left, right), same image.
struct RayBundle {
    Ray center;
    std::array<Ray, 4> neighbors;
    PixelSupervision sup;
};
using RayBatch = std::vector<RayBundle>;

struct GraphOptions {
    SamplerConfig sampler;
    double opacity_gate = 0.5;  // accumulated-opacity threshold for normal supervision
};

// Recorded forward evaluation of one bundle. The main trace holds 7n columns:
// n samples followed by six n-column stencil blocks (+x, -x, +y, -y, +z, -z).
// The surface trace holds 6 columns per gated point (center first).
struct RayTape {
    VectorXd ts;
    SdfTrace main;
    Matrix3Xd grads;       // finite-difference SDF gradients at the samples
    ColorTrace color;      // n-1 columns
    VectorXd alphas;       // n-1
    RenderResult render;
    double eps = 0;

    bool normal_active = false;
    SdfTrace surface;      // 30 columns when active, 6 otherwise (diagnostics)
    std::array<Vec3, 5> surface_grads{};
    double delta_pred = 0;
};

struct BatchForward {
    double lambda = 0;
    std::vector<RayTape> tapes;
    BatchLosses losses;
};

// Renders every bundle with internally drawn, per-ray-seeded samples (the
// sample positions are treated as fixed quadrature points) and evaluates all
// loss terms. Throws NonFiniteError if any loss is not finite.
BatchForward forward_batch(const ParameterStore& params, double lambda, const RayBatch& batch,
                           const GraphOptions& opts, const LossWeights& weights,
                           std::uint64_t seed, std::uint64_t iteration);

// Same, with caller-provided sample parameters per ray (>= 2 each).
BatchForward forward_batch_fixed(const ParameterStore& params, double lambda,
                                 const RayBatch& batch, const GraphOptions& opts,
                                 const LossWeights& weights,
                                 const std::vector<VectorXd>& samples);

// Multipliers on the four loss terms for reverse mode; one-hot selectors give
// per-term gradients, (1, lambda1, lambda2, lambda3) gives the training total.
struct LossSelector {
    double color = 1, depth = 0, normal = 0, eikonal = 0;

    static LossSelector training(const LossWeights& w) { return {1, w.depth, w.normal, w.eikonal}; }
};

// Reverse-mode accumulation over the recorded forward; adds into `grad`
// (ParamLayout-sized). Rendered depth stays on the tape: normal-loss probe
// positions feed back into the compositing weights.
void backward_batch(const ParameterStore& params, const BatchForward& fwd, const RayBatch& batch,
                    const LossSelector& sel, std::span<double> grad);

}  // namespace satsurf
