#include <doctest.h>

#include "satsurf/metrics.hpp"

using namespace satsurf;

namespace {

Dsm random_dsm(std::uint64_t seed, double nodata_rate = 0.0) {
    DsmSpec spec;
    spec.x0 = 100;
    spec.y0 = 200;
    spec.cell = 0.5;
    spec.width = 24;
    spec.height = 18;
    Dsm dsm(spec);
    RngStream rng(seed);
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c)
            if (rng.uniform() >= nodata_rate) dsm.heights(r, c) = rng.uniform(0, 30);
    return dsm;
}

}  // namespace

TEST_CASE("dsm stats: identical and offset grids") {
    const Dsm a = random_dsm(1);
    const DsmDiffReport same = dsm_error_stats(a, a);
    CHECK(same.mae == 0.0);
    CHECK(same.med == 0.0);
    CHECK(same.valid_cells == 24 * 18);

    Dsm b = a;
    b.heights.array() += 2.0;
    const DsmDiffReport off = dsm_error_stats(b, a);
    CHECK(off.mae == doctest::Approx(2.0));
    CHECK(off.med == doctest::Approx(2.0));
    // median alignment removes a constant shift entirely
    const DsmDiffReport aligned = dsm_error_stats(b, a, true);
    CHECK(aligned.mae == doctest::Approx(0.0));
}

TEST_CASE("dsm stats match a direct per-pixel oracle") {
    const Dsm a = random_dsm(2, 0.15);
    const Dsm b = random_dsm(3, 0.1);
    const DsmDiffReport rep = dsm_error_stats(a, b);
    std::vector<double> diffs;
    for (int r = 0; r < a.spec.height; ++r)
        for (int c = 0; c < a.spec.width; ++c)
            if (a.valid(r, c) && b.valid(r, c))
                diffs.push_back(std::fabs(a.heights(r, c) - b.heights(r, c)));
    double mean = 0;
    for (double d : diffs) mean += d;
    mean /= diffs.size();
    std::sort(diffs.begin(), diffs.end());
    const double med = diffs.size() % 2 ? diffs[diffs.size() / 2]
                                        : 0.5 * (diffs[diffs.size() / 2] +
                                                 diffs[diffs.size() / 2 - 1]);
    CHECK(rep.mae == doctest::Approx(mean).epsilon(1e-12));
    CHECK(rep.med == doctest::Approx(med).epsilon(1e-12));
    CHECK(rep.valid_cells == static_cast<std::int64_t>(diffs.size()));
}

TEST_CASE("dsm stats invariant under joint masking") {
    Dsm a = random_dsm(4);
    Dsm b = random_dsm(5);
    const DsmDiffReport before = dsm_error_stats(a, b);
    // mask the same cells in both: the remaining distribution is unchanged
    // only if the masked cells carry representative values; instead verify
    // stats depend solely on jointly-valid cells
    a.heights(0, 0) = Dsm::kNoData;
    b.heights(0, 0) = Dsm::kNoData;
    const DsmDiffReport after = dsm_error_stats(a, b);
    CHECK(after.valid_cells == before.valid_cells - 1);
}

TEST_CASE("dsm stats rejects mismatched grids and empty overlap") {
    const Dsm a = random_dsm(6);
    Dsm b = random_dsm(7);
    b.spec.cell = 1.0;
    b.heights = a.heights;
    CHECK_THROWS_AS(dsm_error_stats(a, b), GridMismatchError);

    Dsm c(a.spec);  // all NoData
    CHECK_THROWS_AS(dsm_error_stats(a, c), NoOverlapError);
}

TEST_CASE("chamfer worked example and symmetry") {
    const std::vector<Vec3> s1 = {Vec3(0, 0, 0)};
    const std::vector<Vec3> s2 = {Vec3(1, 0, 0)};
    CHECK(chamfer(s1, s2) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(chamfer(s1, s1) == 0.0);

    RngStream rng(8);
    std::vector<Vec3> a(60), b(45);
    for (auto& p : a) p = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    for (auto& p : b) p = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-12));
}

TEST_CASE("chamfer equals the quadratic brute force") {
    RngStream rng(9);
    std::vector<Vec3> a(100), b(100);
    for (auto& p : a) p = Vec3(rng.normal(), rng.normal(), rng.normal());
    for (auto& p : b) p = Vec3(rng.normal(), rng.normal(), rng.normal());
    auto brute = [](const std::vector<Vec3>& s, const std::vector<Vec3>& t) {
        double acc = 0;
        for (const auto& p : s) {
            double best = 1e300;
            for (const auto& q : t) best = std::min(best, (p - q).squaredNorm());
            acc += best;
        }
        return acc / s.size();
    };
    const double expect = brute(a, b) + brute(b, a);
    CHECK(chamfer(a, b) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("chamfer invariant under joint translation") {
    RngStream rng(10);
    std::vector<Vec3> a(40), b(30);
    for (auto& p : a) p = Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    for (auto& p : b) p = Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    const double before = chamfer(a, b);
    const Vec3 shift(1000, -500, 250);
    for (auto& p : a) p += shift;
    for (auto& p : b) p += shift;
    CHECK(chamfer(a, b) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("chamfer rejects empty sets") {
    const std::vector<Vec3> empty;
    const std::vector<Vec3> one = {Vec3(0, 0, 0)};
    CHECK_THROWS_AS(chamfer(empty, one), EmptySetError);
    CHECK_THROWS_AS(chamfer(one, empty), EmptySetError);
}

TEST_CASE("dsm_to_points uses cell centers of valid cells") {
    Dsm dsm(DsmSpec{10.0, 20.0, 2.0, 3, 2});
    dsm.heights(0, 0) = 7.0;  // north-west cell
    const auto pts = dsm_to_points(dsm);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].x() == doctest::Approx(11.0));
    CHECK(pts[0].y() == doctest::Approx(23.0));  // top row => y0 + (2-0-0.5)*2
    CHECK(pts[0].z() == doctest::Approx(7.0));
}
