#include <doctest.h>

#include <Eigen/Geometry>

#include "satsurf/losses.hpp"

using namespace satsurf;

TEST_CASE("color loss worked examples") {
    Matrix3Xd r(3, 1), t(3, 1);
    r.col(0) = Vec3(1, 0, 0);
    t.col(0) = Vec3(0, 0, 0);
    CHECK(color_loss(r, t) == doctest::Approx(1.0));
    CHECK(color_loss(t, t) == 0.0);
    // homogeneity
    Matrix3Xd r2 = t;
    r2.col(0) = Vec3(2, 0, 0);
    CHECK(color_loss(r2, t) == doctest::Approx(2.0 * color_loss(r, t)));
}

TEST_CASE("eikonal loss worked examples") {
    std::vector<Vec3> unit = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, -1)};
    CHECK(eikonal_loss(unit) == 0.0);
    std::vector<Vec3> twice = {Vec3(2, 0, 0)};
    CHECK(eikonal_loss(twice) == doctest::Approx(1.0));
    // direct-evaluation oracle on random gradients
    RngStream rng(17);
    std::vector<Vec3> grads(50);
    double oracle = 0;
    for (auto& g : grads) {
        g = Vec3(rng.normal(), rng.normal(), rng.normal());
        oracle += (g.norm() - 1.0) * (g.norm() - 1.0);
    }
    oracle /= 50.0;
    CHECK(eikonal_loss(grads) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("depth loss keeps the batch size in the denominator") {
    const double rendered[2] = {2.0, 5.0};
    const double target[2] = {1.0, 2.0};
    const std::uint8_t mask[2] = {1, 0};
    CHECK(depth_loss(rendered, target, mask) == doctest::Approx(0.5));
    const std::uint8_t all[2] = {1, 1};
    CHECK(depth_loss(target, target, all) == 0.0);
    const std::uint8_t none[2] = {0, 0};
    CHECK(depth_loss(rendered, target, none) == 0.0);
}

TEST_CASE("delta_pred worked examples") {
    const Vec3 n(1, 0, 0);
    std::vector<Vec3> same = {n, n, n, n};
    CHECK(delta_pred(n, same) == doctest::Approx(1.0));
    std::vector<Vec3> orth = {Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
    CHECK(delta_pred(n, orth) == doctest::Approx(0.0));
    // magnitudes do not matter
    std::vector<Vec3> scaled = {3 * n, 0.5 * n, 7 * n, n};
    CHECK(delta_pred(2 * n, scaled) == doctest::Approx(1.0));
}

TEST_CASE("normal loss worked examples") {
    const double pred[2] = {0.5, 0.5};
    const double gt[2] = {1.0, 1.0};
    CHECK(normal_loss(pred, gt) == doctest::Approx(0.25));
    CHECK(normal_loss(gt, gt) == 0.0);
}

TEST_CASE("delta_pred invariant under a global rotation") {
    RngStream rng(23);
    const Vec3 center = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    std::vector<Vec3> nbrs(4);
    for (auto& n : nbrs) n = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double before = delta_pred(center, nbrs);

    const Eigen::AngleAxisd rot(0.83, Vec3(0.2, -0.5, 0.7).normalized());
    std::vector<Vec3> rotated(4);
    for (int i = 0; i < 4; ++i) rotated[i] = rot * nbrs[i];
    const double after = delta_pred(rot * center, rotated);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("total loss combines with the configured weights") {
    BatchLosses parts;
    parts.color = 1;
    parts.depth = 1;
    parts.normal = 1;
    parts.eikonal = 1;
    LossWeights w;  // defaults 0.1 each
    CHECK(total_loss(parts, w) == doctest::Approx(1.3));
    LossWeights zero{0, 0, 0};
    CHECK(total_loss(parts, zero) == doctest::Approx(parts.color));
    // linearity in each weight
    LossWeights w2{0.2, 0.1, 0.1};
    CHECK(total_loss(parts, w2) - total_loss(parts, w) == doctest::Approx(0.1));
}
