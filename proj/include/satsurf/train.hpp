#pragma once

#include <functional>

#include "satsurf/dataset.hpp"
#include "satsurf/graph.hpp"

namespace satsurf {

struct TrainConfig {
    std::int64_t total_iters = 100000;
    int batch_rays = 4096;       // supervised center pixels per step
    int samples_per_ray = 128;
    double lambda_init = 4;
    double lambda_step_fraction = 0.025;
    bool progressive = true;     // off: all grid levels active from the start
    double lr_hash = 1e-2;
    double lr_mlp = 1e-3;
    double lr_sigma = 1e-3;
    double beta1 = 0.9, beta2 = 0.99, adam_eps = 1e-15;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 5000;
    LossWeights weights;
    double opacity_gate = 0.5;

    void validate() const;
};

// lambda = min(L, lambda_init + floor(iter / (step_fraction * total))).
double schedule_lambda(std::int64_t iter, const TrainConfig& cfg, int levels);

// Uniform draw of batch_rays interior pixels over all views, with the
// 4-neighbor rays and supervision targets attached.
RayBatch build_batch(const Dataset& dataset, RngStream& rng, int batch_rays);

struct TrainState {
    ParameterStore params;
    std::vector<double> m, v;  // Adam moments, ParamLayout order
    std::int64_t iter = 0;

    explicit TrainState(FieldConfig cfg)
        : params(cfg), m(params.size(), 0.0), v(params.size(), 0.0) {}
};

TrainState make_train_state(const FieldConfig& cfg, const TrainConfig& train,
                            const Dataset& dataset);
TrainState train_state_from_checkpoint(const LoadedCheckpoint& ck);

// One optimization step: batch, forward render, reverse mode, Adam update with
// per-group learning rates (cosine decay after 50% of training). Hash levels
// gated off by lambda are skipped entirely, moments included.
BatchLosses train_step(TrainState& state, const Dataset& dataset, const TrainConfig& cfg);

struct TrainHooks {
    // called after every step
    std::function<void(std::int64_t iter, const BatchLosses&, double lambda, double s)> on_step;
    // called on the first forward of the run (renderer debug dumps)
    std::function<void(const BatchForward&)> on_first_forward;
};

// Runs to total_iters, checkpointing every checkpoint_every iterations plus a
// final checkpoint; throws RuntimeFailure naming the last good checkpoint if a
// loss or gradient turns non-finite.
void train_loop(TrainState& state, const Dataset& dataset, const TrainConfig& cfg,
                const std::filesystem::path& checkpoint_dir, const TrainHooks& hooks = {});

}  // namespace satsurf
