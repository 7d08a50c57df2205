#include "satsurf/train.hpp"

#include <cmath>

namespace satsurf {

void TrainConfig::validate() const {
    if (total_iters < 1) throw ValidationError("train.total_iters must be >= 1");
    if (batch_rays < 1) throw ValidationError("train.batch_rays must be >= 1");
    if (samples_per_ray < 16 || samples_per_ray % 8 != 0)
        throw ValidationError("train.samples_per_ray must be a multiple of 8, >= 16");
    if (!(lambda_step_fraction > 0.0) || lambda_step_fraction > 1.0)
        throw ValidationError("train.lambda_step_fraction must be in (0, 1]");
    if (lambda_init < 0) throw ValidationError("train.lambda_init must be >= 0");
    if (lr_hash <= 0 || lr_mlp <= 0 || lr_sigma <= 0)
        throw ValidationError("train: learning rates must be positive");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
        throw ValidationError("train: beta1/beta2 must lie in [0, 1)");
    if (checkpoint_every < 1) throw ValidationError("train.checkpoint_every must be >= 1");
    weights.validate();
}

double schedule_lambda(std::int64_t iter, const TrainConfig& cfg, int levels) {
    if (!cfg.progressive) return levels;
    const double step = cfg.lambda_step_fraction * static_cast<double>(cfg.total_iters);
    const double lam = cfg.lambda_init + std::floor(static_cast<double>(iter) / step);
    return std::min<double>(levels, lam);
}

RayBatch build_batch(const Dataset& dataset, RngStream& rng, int batch_rays) {
    const std::int64_t total = dataset.interior_pixels();
    if (total <= 0) throw EmptyDatasetError("build_batch: dataset has no interior pixels");

    RayBatch batch;
    batch.reserve(batch_rays);
    for (int i = 0; i < batch_rays; ++i) {
        std::int64_t pick = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(total)));
        int image = 0;
        for (; image < static_cast<int>(dataset.views.size()); ++image) {
            const auto& view = dataset.views[image];
            const std::int64_t count =
                std::int64_t(std::max(view.width - 2, 0)) * std::max(view.height - 2, 0);
            if (pick < count) break;
            pick -= count;
        }
        const TrainView& view = dataset.views[image];
        const int iw = view.width - 2;
        const int u = 1 + static_cast<int>(pick / iw);
        const int v = 1 + static_cast<int>(pick % iw);
        const std::size_t pix = std::size_t(u) * view.width + v;

        RayBundle bundle;
        bundle.center = view.ray_at(u, v);
        bundle.neighbors = {view.ray_at(u - 1, v), view.ray_at(u + 1, v), view.ray_at(u, v - 1),
                            view.ray_at(u, v + 1)};
        bundle.sup.image = image;
        bundle.sup.u = u;
        bundle.sup.v = v;
        bundle.sup.color =
            Vec3(view.rgb[pix * 3], view.rgb[pix * 3 + 1], view.rgb[pix * 3 + 2]);
        bundle.sup.sun_dir = view.sun_dir;
        if (view.has_depth) {
            bundle.sup.depth = view.fused_depth[pix];
            bundle.sup.depth_valid = view.depth_valid[pix] != 0;
        }
        if (!view.delta_gt.empty() && view.delta_valid[pix]) {
            bundle.sup.delta_gt = view.delta_gt[pix];
            bundle.sup.normal_valid = true;
        }
        batch.push_back(std::move(bundle));
    }
    return batch;
}

TrainState make_train_state(const FieldConfig& cfg, const TrainConfig& train,
                            const Dataset& dataset) {
    TrainState state(cfg);

    // geometric init plane: median altitude of the sparse-supported surface,
    // approximated by the median fused depth pushed through a nadir proxy; in
    // its absence, the slab midplane (canonical z = 0).
    std::vector<double> zs;
    for (const auto& view : dataset.views) {
        if (!view.has_depth) continue;
        for (std::size_t i = 0; i < view.fused_depth.size(); i += 97) {
            if (!view.depth_valid[i]) continue;
            const Ray& ray = view.rays[i];
            const Vec3 p = ray.point(view.fused_depth[i]);
            if (std::isfinite(p.z())) zs.push_back(p.z());
        }
    }
    double plane_z = 0.0;
    if (zs.size() > 16) {
        const std::size_t mid = zs.size() / 2;
        std::nth_element(zs.begin(), zs.begin() + mid, zs.end());
        plane_z = zs[mid];
    }
    state.params.initialize(train.seed, plane_z);
    return state;
}

TrainState train_state_from_checkpoint(const LoadedCheckpoint& ck) {
    TrainState state(ck.config);
    state.params.values() = ck.params;
    state.m = ck.m;
    state.v = ck.v;
    state.iter = ck.iteration;
    return state;
}

namespace {

void adam_range(std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                const std::vector<double>& g, std::int64_t begin, std::int64_t end, double lr,
                double beta1, double beta2, double eps, std::int64_t t) {
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::int64_t i = begin; i < end; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace

BatchLosses train_step(TrainState& state, const Dataset& dataset, const TrainConfig& cfg) {
    const FieldConfig& fcfg = state.params.config();
    const double lambda = schedule_lambda(state.iter, cfg, fcfg.grid.levels);

    RngStream batch_rng(derive_seed(cfg.seed, 0xBA7C, static_cast<std::uint64_t>(state.iter)));
    const RayBatch batch = build_batch(dataset, batch_rng, cfg.batch_rays);

    GraphOptions opts;
    opts.sampler.n_total = cfg.samples_per_ray;
    opts.opacity_gate = cfg.opacity_gate;

    const BatchForward fwd = forward_batch(state.params, lambda, batch, opts, cfg.weights,
                                           cfg.seed, static_cast<std::uint64_t>(state.iter));

    std::vector<double> grad(state.params.size(), 0.0);
    backward_batch(state.params, fwd, batch, LossSelector::training(cfg.weights), grad);
    for (double g : grad)
        if (!std::isfinite(g)) throw NonFiniteError("train_step: non-finite gradient");

    // cosine decay after 50% of training
    double decay = 1.0;
    const std::int64_t half = cfg.total_iters / 2;
    if (state.iter >= half && cfg.total_iters > half) {
        const double frac =
            static_cast<double>(state.iter - half) / static_cast<double>(cfg.total_iters - half);
        decay = 0.5 * (1.0 + std::cos(M_PI * frac));
    }

    const ParamLayout& lay = state.params.layout();
    const std::int64_t t = state.iter + 1;
    auto& theta = state.params.values();

    // active hash levels only; gated-off levels keep parameters and moments
    const int active = active_levels(lambda, fcfg.grid.levels);
    const std::int64_t per_level = fcfg.grid.table_size() * fcfg.grid.feature_dim;
    adam_range(theta, state.m, state.v, grad, lay.tables.off, lay.tables.off + active * per_level,
               cfg.lr_hash * decay, cfg.beta1, cfg.beta2, cfg.adam_eps, t);
    adam_range(theta, state.m, state.v, grad, lay.w1.off, lay.sigma.off, cfg.lr_mlp * decay,
               cfg.beta1, cfg.beta2, cfg.adam_eps, t);
    adam_range(theta, state.m, state.v, grad, lay.sigma.off, lay.sigma.off + 1,
               cfg.lr_sigma * decay, cfg.beta1, cfg.beta2, cfg.adam_eps, t);

    ++state.iter;
    return fwd.losses;
}

void train_loop(TrainState& state, const Dataset& dataset, const TrainConfig& cfg,
                const std::filesystem::path& checkpoint_dir, const TrainHooks& hooks) {
    cfg.validate();
    std::filesystem::create_directories(checkpoint_dir);
    std::filesystem::path last_good = "<none>";

    auto checkpoint_name = [&](std::int64_t iter) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "ckpt_%08lld.bin", static_cast<long long>(iter));
        return checkpoint_dir / buf;
    };

    bool first = true;
    while (state.iter < cfg.total_iters) {
        BatchLosses losses;
        try {
            if (first && hooks.on_first_forward) {
                // replicate the step's forward for inspection before training
                RngStream rng(derive_seed(cfg.seed, 0xBA7C, static_cast<std::uint64_t>(state.iter)));
                const RayBatch batch = build_batch(dataset, rng, cfg.batch_rays);
                GraphOptions opts;
                opts.sampler.n_total = cfg.samples_per_ray;
                opts.opacity_gate = cfg.opacity_gate;
                const double lambda =
                    schedule_lambda(state.iter, cfg, state.params.config().grid.levels);
                hooks.on_first_forward(forward_batch(state.params, lambda, batch, opts,
                                                     cfg.weights, cfg.seed,
                                                     static_cast<std::uint64_t>(state.iter)));
            }
            first = false;
            losses = train_step(state, dataset, cfg);
        } catch (const NonFiniteError& e) {
            throw RuntimeFailure(std::string(e.what()) + "; last good checkpoint: " +
                                 last_good.string());
        }
        if (hooks.on_step)
            hooks.on_step(state.iter - 1, losses,
                          schedule_lambda(state.iter - 1, cfg, state.params.config().grid.levels),
                          state.params.s());
        if (state.iter % cfg.checkpoint_every == 0 && state.iter < cfg.total_iters) {
            const auto path = checkpoint_name(state.iter);
            save_checkpoint(path, state.params, state.m, state.v, state.iter);
            last_good = path;
        }
    }
    save_checkpoint(checkpoint_dir / "ckpt_final.bin", state.params, state.m, state.v,
                    state.iter);
}

}  // namespace satsurf
