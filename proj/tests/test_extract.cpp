#include <doctest.h>

#include <Eigen/Geometry>
#include <filesystem>
#include <fstream>

#include "satsurf/extract.hpp"

using namespace satsurf;

namespace {

SdfBatchFn sphere_sdf(double radius) {
    return [radius](const Matrix3Xd& X, VectorXd& f) {
        f.resize(X.cols());
        for (int i = 0; i < X.cols(); ++i) f(i) = X.col(i).norm() - radius;
    };
}

// closed unit-pyramid-style mesh used for the rasterization oracle
TriangleMesh two_triangle_patch() {
    TriangleMesh m;
    m.frame = TriangleMesh::Frame::Utm;
    m.vertices = {Vec3(0, 0, 5), Vec3(10, 0, 7), Vec3(10, 10, 9), Vec3(0, 10, 11)};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

}  // namespace

TEST_CASE("marching cubes on an analytic sphere stays within 1.5 cells") {
    const TriangleMesh mesh = marching_cubes(sphere_sdf(0.5), 64);
    REQUIRE(!mesh.vertices.empty());
    const double cell = 2.0 / 64;
    for (const auto& v : mesh.vertices) CHECK(std::fabs(v.norm() - 0.5) <= 1.5 * cell);
    // triangles reference valid, distinct vertices
    for (const auto& t : mesh.triangles) {
        for (int k : t) {
            CHECK(k >= 0);
            CHECK(k < static_cast<int>(mesh.vertices.size()));
        }
        CHECK(t[0] != t[1]);
        CHECK(t[1] != t[2]);
    }
}

TEST_CASE("marching cubes on a half-space gives a flat sheet at z=0") {
    const SdfBatchFn plane = [](const Matrix3Xd& X, VectorXd& f) { f = X.row(2).transpose(); };
    const TriangleMesh mesh = marching_cubes(plane, 32);
    REQUIRE(!mesh.vertices.empty());
    const double cell = 2.0 / 32;
    for (const auto& v : mesh.vertices) CHECK(std::fabs(v.z()) <= cell * 1e-6 + 1e-12);
}

TEST_CASE("marching cubes reports an empty surface") {
    const SdfBatchFn positive = [](const Matrix3Xd& X, VectorXd& f) {
        f = VectorXd::Constant(X.cols(), 1.0);
    };
    CHECK_THROWS_AS(marching_cubes(positive, 16), EmptySurfaceError);
}

TEST_CASE("dsm rasterization: flat plate covers every cell") {
    TriangleMesh plate;
    plate.frame = TriangleMesh::Frame::Utm;
    plate.vertices = {Vec3(-1, -1, 30), Vec3(21, -1, 30), Vec3(21, 21, 30), Vec3(-1, 21, 30)};
    plate.triangles = {{0, 1, 2}, {0, 2, 3}};
    DsmSpec spec;
    spec.x0 = 0;
    spec.y0 = 0;
    spec.cell = 1.0;
    spec.width = 20;
    spec.height = 20;
    const Dsm dsm = rasterize_dsm(plate, spec);
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 20; ++c) CHECK(dsm.heights(r, c) == doctest::Approx(30.0));
}

TEST_CASE("dsm rasterization: stacked plates keep the maximum") {
    TriangleMesh mesh;
    mesh.frame = TriangleMesh::Frame::Utm;
    mesh.vertices = {Vec3(-1, -1, 10), Vec3(21, -1, 10), Vec3(21, 21, 10), Vec3(-1, 21, 10),
                     Vec3(-1, -1, 30), Vec3(21, -1, 30), Vec3(21, 21, 30), Vec3(-1, 21, 30)};
    mesh.triangles = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
    DsmSpec spec;
    spec.x0 = 0;
    spec.y0 = 0;
    spec.cell = 1.0;
    spec.width = 20;
    spec.height = 20;
    const Dsm dsm = rasterize_dsm(mesh, spec);
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 20; ++c) CHECK(dsm.heights(r, c) == doctest::Approx(30.0));
}

TEST_CASE("dsm rasterization matches a ray/triangle intersection oracle") {
    const TriangleMesh mesh = two_triangle_patch();
    DsmSpec spec;
    spec.x0 = 0;
    spec.y0 = 0;
    spec.cell = 0.5;
    spec.width = 24;
    spec.height = 24;
    const Dsm dsm = rasterize_dsm(mesh, spec);

    // Moeller-Trumbore-style vertical intersection oracle
    auto intersect = [](const Vec3& a, const Vec3& b, const Vec3& c, double px, double py,
                        double* z) {
        const Vec3 o(px, py, -1000.0), d(0, 0, 1);
        const Vec3 e1 = b - a, e2 = c - a;
        const Vec3 p = d.cross(e2);
        const double det = e1.dot(p);
        if (std::fabs(det) < 1e-14) return false;
        const Vec3 tvec = o - a;
        const double u = tvec.dot(p) / det;
        if (u < -1e-12 || u > 1 + 1e-12) return false;
        const Vec3 q = tvec.cross(e1);
        const double v = d.dot(q) / det;
        if (v < -1e-12 || u + v > 1 + 1e-12) return false;
        *z = -1000.0 + e2.dot(q) / det;
        return true;
    };

    for (int r = 0; r < spec.height; ++r) {
        for (int c = 0; c < spec.width; ++c) {
            double best = Dsm::kNoData;
            for (const auto& tri : mesh.triangles) {
                double z;
                if (intersect(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                              mesh.vertices[tri[2]], spec.cell_center_x(c),
                              spec.cell_center_y(r), &z))
                    best = best == Dsm::kNoData ? z : std::max(best, z);
            }
            if (best == Dsm::kNoData) {
                CHECK(!dsm.valid(r, c));
            } else {
                REQUIRE(dsm.valid(r, c));
                CHECK(dsm.heights(r, c) == doctest::Approx(best).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("mesh/dsm consistency on a marching-cubes height field") {
    // analytic height field z = 0.2 sin(2x) cos(y); SDF approx = z - h(x, y)
    const SdfBatchFn field = [](const Matrix3Xd& X, VectorXd& f) {
        f.resize(X.cols());
        for (int i = 0; i < X.cols(); ++i)
            f(i) = X.col(i).z() - 0.2 * std::sin(2 * X.col(i).x()) * std::cos(X.col(i).y());
    };
    const int res = 64;
    TriangleMesh mesh = marching_cubes(field, res);
    DsmSpec spec;
    spec.x0 = -0.9;
    spec.y0 = -0.9;
    spec.cell = 2.0 / res;
    spec.width = static_cast<int>(1.8 / spec.cell);
    spec.height = static_cast<int>(1.8 / spec.cell);
    const Dsm dsm = rasterize_dsm(mesh, spec);
    double err_sum = 0;
    std::int64_t count = 0;
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c) {
            REQUIRE(dsm.valid(r, c));
            const double x = spec.cell_center_x(c), y = spec.cell_center_y(r);
            err_sum += std::fabs(dsm.heights(r, c) - 0.2 * std::sin(2 * x) * std::cos(y));
            ++count;
        }
    CHECK(err_sum / count <= 2.0 * spec.cell);
}

TEST_CASE("nodata fill interpolates inside the radius only") {
    TriangleMesh plate;
    plate.frame = TriangleMesh::Frame::Utm;
    plate.vertices = {Vec3(0, 0, 8), Vec3(6, 0, 8), Vec3(6, 6, 8), Vec3(0, 6, 8)};
    plate.triangles = {{0, 1, 2}, {0, 2, 3}};
    DsmSpec spec;
    spec.x0 = 0;
    spec.y0 = 0;
    spec.cell = 1.0;
    spec.width = 30;
    spec.height = 30;
    const Dsm raw = rasterize_dsm(plate, spec, false);
    CHECK(raw.valid_fraction() < 0.2);
    const Dsm filled = rasterize_dsm(plate, spec, true, 5);
    CHECK(filled.valid_fraction() > raw.valid_fraction());
    // far corner stays NoData (beyond the fill radius)
    CHECK(!filled.valid(0, 29));
}

TEST_CASE("asc roundtrip with nodata cells") {
    const auto dir = std::filesystem::temp_directory_path() / "satsurf_asc_test";
    std::filesystem::create_directories(dir);
    DsmSpec spec;
    spec.x0 = 435000.25;
    spec.y0 = 3355000.75;
    spec.cell = 0.5;
    spec.width = 13;
    spec.height = 7;
    Dsm dsm(spec);
    RngStream rng(6);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 13; ++c)
            if (rng.uniform() > 0.2) dsm.heights(r, c) = rng.uniform(-5, 40);
    write_dsm_asc(dsm, dir / "g.asc");
    const Dsm back = read_dsm_asc(dir / "g.asc");
    CHECK(back.spec == spec);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 13; ++c) {
            CHECK(back.valid(r, c) == dsm.valid(r, c));
            if (dsm.valid(r, c))
                CHECK(back.heights(r, c) == doctest::Approx(dsm.heights(r, c)).epsilon(1e-12));
        }
    std::filesystem::remove_all(dir);
}

TEST_CASE("ply and obj writers emit the mesh") {
    const auto dir = std::filesystem::temp_directory_path() / "satsurf_mesh_test";
    std::filesystem::create_directories(dir);
    const TriangleMesh mesh = two_triangle_patch();
    write_ply(mesh, dir / "m.ply");
    write_obj(mesh, dir / "m.obj");
    std::ifstream ply(dir / "m.ply");
    std::string text((std::istreambuf_iterator<char>(ply)), std::istreambuf_iterator<char>());
    CHECK(text.find("element vertex 4") != std::string::npos);
    CHECK(text.find("element face 2") != std::string::npos);
    std::ifstream obj(dir / "m.obj");
    std::string otext((std::istreambuf_iterator<char>(obj)), std::istreambuf_iterator<char>());
    CHECK(otext.find("v 0 0 5") != std::string::npos);
    CHECK(otext.find("f 1 2 3") != std::string::npos);
    std::filesystem::remove_all(dir);
}
