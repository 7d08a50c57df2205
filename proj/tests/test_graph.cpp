#include <doctest.h>

#include "support/gradcheck.hpp"

using namespace satsurf;
using namespace satsurf::testsupport;

namespace {

FieldConfig grad_config() {
    FieldConfig cfg;
    cfg.grid.levels = 2;
    cfg.grid.base_resolution = 4;
    cfg.grid.max_resolution = 16;
    cfg.grid.table_log2 = 8;
    cfg.grid.feature_dim = 2;
    cfg.point_embed_bands = 2;
    cfg.dir_embed_bands = 1;
    cfg.hidden_dim = 16;
    cfg.geo_feature_dim = 8;
    return cfg;
}

}  // namespace

TEST_CASE("forward batch: losses are finite and countable") {
    GradScene scene = make_grad_scene(grad_config(), 4, 12, 3);
    const BatchForward fwd = forward_batch_fixed(scene.params, scene.lambda, scene.batch,
                                                 scene.opts, scene.weights, scene.samples);
    CHECK(fwd.losses.rays == 4);
    CHECK(fwd.losses.eikonal_samples == 4 * 12);
    CHECK(std::isfinite(fwd.losses.total));
    CHECK(fwd.losses.color >= 0);
    CHECK(fwd.losses.depth >= 0);
    CHECK(fwd.losses.normal >= 0);
    CHECK(fwd.losses.eikonal >= 0);
    CHECK(fwd.losses.total ==
          doctest::Approx(fwd.losses.color + 0.1 * fwd.losses.depth + 0.1 * fwd.losses.normal +
                          0.1 * fwd.losses.eikonal)
              .epsilon(1e-9));
    // every tape rendered a sensible ray
    for (const auto& tape : fwd.tapes) {
        CHECK(tape.render.weight_sum <= 1.0 + 1e-6);
        CHECK(tape.render.weights.minCoeff() >= 0.0);
        CHECK(tape.render.depth >= 0.0);
        CHECK(tape.render.depth <= 2.0);
    }
}

TEST_CASE("per-term gradients match finite differences") {
    GradScene scene = make_grad_scene(grad_config(), 4, 12, 3);
    SUBCASE("color") { gradcheck(scene, {1, 0, 0, 0}, 24, 100); }
    SUBCASE("depth") { gradcheck(scene, {0, 1, 0, 0}, 24, 200); }
    SUBCASE("normal") { gradcheck(scene, {0, 0, 1, 0}, 24, 300); }
    SUBCASE("eikonal") { gradcheck(scene, {0, 0, 0, 1}, 24, 400); }
    SUBCASE("total") {
        const auto stats = gradcheck(scene, LossSelector::training(scene.weights), 32, 500);
        CHECK(stats.nonzero > 8);
    }
    SUBCASE("total at the coarser h = 1e-4 step") {
        gradcheck(scene, LossSelector::training(scene.weights), 20, 650, 1e-4, 1e-4, 1e-3);
    }
}

TEST_CASE("sigma gradient matches finite differences for every term") {
    GradScene scene = make_grad_scene(grad_config(), 3, 10, 9);
    const std::int64_t idx = scene.params.layout().sigma.off;
    for (const LossSelector sel :
         {LossSelector{1, 0, 0, 0}, LossSelector{0, 1, 0, 0}, LossSelector{0, 0, 1, 0}}) {
        const BatchForward fwd = forward_batch_fixed(scene.params, scene.lambda, scene.batch,
                                                     scene.opts, scene.weights, scene.samples);
        std::vector<double> grad(scene.params.size(), 0.0);
        backward_batch(scene.params, fwd, scene.batch, sel, grad);
        auto& v = scene.params.values();
        const double saved = v[idx], h = 1e-5;
        v[idx] = saved + h;
        const double up = selector_loss(scene, sel);
        v[idx] = saved - h;
        const double dn = selector_loss(scene, sel);
        v[idx] = saved;
        const double fd = (up - dn) / (2 * h);
        CHECK(grad[idx] == doctest::Approx(fd).epsilon(2e-4));
    }
}

TEST_CASE("gated-off hash entries receive exactly zero gradient") {
    FieldConfig cfg = grad_config();
    GradScene scene = make_grad_scene(cfg, 3, 10, 5);
    scene.lambda = 1.0;  // level 2 gated off
    const BatchForward fwd = forward_batch_fixed(scene.params, scene.lambda, scene.batch,
                                                 scene.opts, scene.weights, scene.samples);
    std::vector<double> grad(scene.params.size(), 0.0);
    backward_batch(scene.params, fwd, scene.batch, LossSelector::training(scene.weights), grad);
    const auto& lay = scene.params.layout();
    const std::int64_t per_level = cfg.grid.table_size() * cfg.grid.feature_dim;
    double level0 = 0;
    for (std::int64_t i = 0; i < per_level; ++i) {
        level0 += std::fabs(grad[lay.tables.off + i]);
        CHECK(grad[lay.tables.off + per_level + i] == 0.0);
    }
    CHECK(level0 > 0.0);
}

TEST_CASE("doubling the depth weight doubles its gradient contribution") {
    GradScene scene = make_grad_scene(grad_config(), 3, 10, 7);
    const BatchForward fwd = forward_batch_fixed(scene.params, scene.lambda, scene.batch,
                                                 scene.opts, scene.weights, scene.samples);
    std::vector<double> g1(scene.params.size(), 0.0), g2(scene.params.size(), 0.0);
    backward_batch(scene.params, fwd, scene.batch, {0, 1, 0, 0}, g1);
    backward_batch(scene.params, fwd, scene.batch, {0, 2, 0, 0}, g2);
    for (std::int64_t i = 0; i < scene.params.size(); i += 37)
        CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("forward/backward replay is bit-identical") {
    GradScene scene = make_grad_scene(grad_config(), 4, 12, 11);
    const BatchForward f1 = forward_batch_fixed(scene.params, scene.lambda, scene.batch,
                                                scene.opts, scene.weights, scene.samples);
    const BatchForward f2 = forward_batch_fixed(scene.params, scene.lambda, scene.batch,
                                                scene.opts, scene.weights, scene.samples);
    CHECK(f1.losses.total == f2.losses.total);
    CHECK(f1.losses.color == f2.losses.color);
    std::vector<double> g1(scene.params.size(), 0.0), g2(scene.params.size(), 0.0);
    backward_batch(scene.params, f1, scene.batch, LossSelector::training(scene.weights), g1);
    backward_batch(scene.params, f2, scene.batch, LossSelector::training(scene.weights), g2);
    CHECK(g1 == g2);
}

TEST_CASE("internally sampled forward is seed-deterministic") {
    GradScene scene = make_grad_scene(grad_config(), 3, 16, 13);
    const BatchForward a =
        forward_batch(scene.params, scene.lambda, scene.batch, scene.opts, scene.weights, 42, 7);
    const BatchForward b =
        forward_batch(scene.params, scene.lambda, scene.batch, scene.opts, scene.weights, 42, 7);
    CHECK(a.losses.total == b.losses.total);
    const BatchForward c =
        forward_batch(scene.params, scene.lambda, scene.batch, scene.opts, scene.weights, 42, 8);
    CHECK(a.losses.total != c.losses.total);
}
