#include "satsurf/extract.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "mc_tables.hpp"
#include "satsurf/image_io.hpp"

namespace satsurf {

namespace {

// cube corner offsets in the Bourke numbering
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// edge -> corner pair
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                     {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

TriangleMesh marching_cubes_grid(const std::vector<double>& values, int resolution, double iso) {
    if (resolution < 8) throw ValidationError("marching_cubes: resolution must be >= 8");
    const std::int64_t n1 = resolution + 1;
    if (static_cast<std::int64_t>(values.size()) != n1 * n1 * n1)
        throw ValidationError("marching_cubes: grid size mismatch");

    auto vid = [n1](std::int64_t x, std::int64_t y, std::int64_t z) {
        return x + n1 * (y + n1 * z);
    };
    auto coord = [resolution](std::int64_t i) { return -1.0 + 2.0 * double(i) / resolution; };

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, int> edge_vertices;
    const std::uint64_t grid_points = static_cast<std::uint64_t>(n1 * n1 * n1);

    auto edge_vertex = [&](std::int64_t ax, std::int64_t ay, std::int64_t az, std::int64_t bx,
                           std::int64_t by, std::int64_t bz) {
        std::uint64_t a = static_cast<std::uint64_t>(vid(ax, ay, az));
        std::uint64_t b = static_cast<std::uint64_t>(vid(bx, by, bz));
        if (a > b) std::swap(a, b);
        const std::uint64_t key = a * grid_points + b;
        auto it = edge_vertices.find(key);
        if (it != edge_vertices.end()) return it->second;
        const double fa = values[a], fb = values[b];
        double t = 0.5;
        if (fb != fa) t = std::clamp((iso - fa) / (fb - fa), 0.0, 1.0);
        const Vec3 pa(coord(a % n1), coord((a / n1) % n1), coord(a / (n1 * n1)));
        const Vec3 pb(coord(b % n1), coord((b / n1) % n1), coord(b / (n1 * n1)));
        const int idx = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(pa + t * (pb - pa));
        edge_vertices.emplace(key, idx);
        return idx;
    };

    for (std::int64_t z = 0; z < resolution; ++z) {
        for (std::int64_t y = 0; y < resolution; ++y) {
            for (std::int64_t x = 0; x < resolution; ++x) {
                int cube = 0;
                double f[8];
                for (int c = 0; c < 8; ++c) {
                    f[c] = values[vid(x + kCorner[c][0], y + kCorner[c][1], z + kCorner[c][2])];
                    if (f[c] < iso) cube |= 1 << c;
                }
                if (detail::kEdgeTable[cube] == 0) continue;
                int ev[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(detail::kEdgeTable[cube] & (1 << e))) continue;
                    const int* ca = kCorner[kEdgeCorners[e][0]];
                    const int* cb = kCorner[kEdgeCorners[e][1]];
                    ev[e] = edge_vertex(x + ca[0], y + ca[1], z + ca[2], x + cb[0], y + cb[1],
                                        z + cb[2]);
                }
                for (int t = 0; detail::kTriTable[cube][t] != -1; t += 3) {
                    const int i0 = ev[detail::kTriTable[cube][t]];
                    const int i1 = ev[detail::kTriTable[cube][t + 1]];
                    const int i2 = ev[detail::kTriTable[cube][t + 2]];
                    if (i0 == i1 || i1 == i2 || i0 == i2) continue;
                    const Vec3 cross = (mesh.vertices[i1] - mesh.vertices[i0])
                                           .cross(mesh.vertices[i2] - mesh.vertices[i0]);
                    if (0.5 * cross.norm() <= 1e-12) continue;
                    mesh.triangles.push_back({i0, i1, i2});
                }
            }
        }
    }
    if (mesh.triangles.empty())
        throw EmptySurfaceError("marching_cubes: no sign change in the field");
    return mesh;
}

TriangleMesh marching_cubes(const SdfBatchFn& sdf, int resolution, double iso) {
    if (resolution < 8) throw ValidationError("marching_cubes: resolution must be >= 8");
    const std::int64_t n1 = resolution + 1;
    std::vector<double> values(n1 * n1 * n1);
    // evaluate plane by plane to bound scratch memory
    parallel_for(n1, [&](std::int64_t z, int) {
        Matrix3Xd X(3, n1 * n1);
        const double cz = -1.0 + 2.0 * double(z) / resolution;
        std::int64_t c = 0;
        for (std::int64_t y = 0; y < n1; ++y)
            for (std::int64_t x = 0; x < n1; ++x, ++c)
                X.col(c) = Vec3(-1.0 + 2.0 * double(x) / resolution,
                                -1.0 + 2.0 * double(y) / resolution, cz);
        VectorXd f;
        sdf(X, f);
        std::copy(f.data(), f.data() + n1 * n1, values.begin() + z * n1 * n1);
    });
    return marching_cubes_grid(values, resolution, iso);
}

void mesh_to_utm(TriangleMesh& mesh, const SceneBounds& bounds) {
    if (mesh.frame == TriangleMesh::Frame::Utm) return;
    for (auto& v : mesh.vertices) v = bounds.utm_from_canonical(v);
    mesh.frame = TriangleMesh::Frame::Utm;
}

void write_ply(const TriangleMesh& mesh, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("ply: cannot write " + file.string());
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.triangles.size() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    out.precision(12);
    for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!out) throw IoError("ply: write failed for " + file.string());
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("obj: cannot write " + file.string());
    out.precision(12);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    if (!out) throw IoError("obj: write failed for " + file.string());
}

double Dsm::valid_fraction() const {
    if (heights.size() == 0) return 0.0;
    std::int64_t n = 0;
    for (int r = 0; r < heights.rows(); ++r)
        for (int c = 0; c < heights.cols(); ++c)
            if (heights(r, c) != kNoData) ++n;
    return static_cast<double>(n) / static_cast<double>(heights.size());
}

Dsm rasterize_dsm(const TriangleMesh& mesh, const DsmSpec& spec, bool fill_nodata,
                  int fill_radius) {
    if (mesh.vertices.empty() || mesh.triangles.empty())
        throw ValidationError("rasterize_dsm: empty mesh");
    if (spec.width < 1 || spec.height < 1 || spec.cell <= 0)
        throw ValidationError("rasterize_dsm: bad grid spec");
    Dsm dsm(spec);

    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
        if (std::fabs(det) < 1e-18) continue;  // vertical in projection

        const double xmin = std::min({a.x(), b.x(), c.x()});
        const double xmax = std::max({a.x(), b.x(), c.x()});
        const double ymin = std::min({a.y(), b.y(), c.y()});
        const double ymax = std::max({a.y(), b.y(), c.y()});
        const int c0 = std::max(0, static_cast<int>(std::floor((xmin - spec.x0) / spec.cell - 0.5)));
        const int c1 = std::min(spec.width - 1,
                                static_cast<int>(std::ceil((xmax - spec.x0) / spec.cell)));
        const int rowlo = std::max(
            0, static_cast<int>(std::floor(spec.height - (ymax - spec.y0) / spec.cell - 0.5)));
        const int rowhi = std::min(
            spec.height - 1, static_cast<int>(std::ceil(spec.height - (ymin - spec.y0) / spec.cell)));

        for (int row = rowlo; row <= rowhi; ++row) {
            const double py = spec.cell_center_y(row);
            for (int col = c0; col <= c1; ++col) {
                const double px = spec.cell_center_x(col);
                const double l1 = ((b.x() - a.x()) * (py - a.y()) - (px - a.x()) * (b.y() - a.y())) / det;
                const double l0 = ((px - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (py - a.y())) / det;
                const double l2 = 1.0 - l0 - l1;
                const double eps = -1e-12;
                if (l0 < eps || l1 < eps || l2 < eps) continue;
                const double z = a.z() + l0 * (b.z() - a.z()) + l1 * (c.z() - a.z());
                if (!dsm.valid(row, col) || z > dsm.heights(row, col))
                    dsm.heights(row, col) = z;
            }
        }
    }

    if (fill_nodata) {
        const MatrixXd src = dsm.heights;
        for (int row = 0; row < spec.height; ++row) {
            for (int col = 0; col < spec.width; ++col) {
                if (src(row, col) != Dsm::kNoData) continue;
                double acc = 0, wsum = 0;
                for (int dr = -fill_radius; dr <= fill_radius; ++dr) {
                    for (int dc = -fill_radius; dc <= fill_radius; ++dc) {
                        const int rr = row + dr, cc = col + dc;
                        if (rr < 0 || rr >= spec.height || cc < 0 || cc >= spec.width) continue;
                        if (src(rr, cc) == Dsm::kNoData) continue;
                        const double d2 = double(dr) * dr + double(dc) * dc;
                        if (d2 == 0 || d2 > double(fill_radius) * fill_radius) continue;
                        acc += src(rr, cc) / d2;
                        wsum += 1.0 / d2;
                    }
                }
                if (wsum > 0) dsm.heights(row, col) = acc / wsum;
            }
        }
    }
    return dsm;
}

void write_dsm_asc(const Dsm& dsm, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("asc: cannot write " + file.string());
    out.precision(17);
    out << "ncols " << dsm.spec.width << "\n";
    out << "nrows " << dsm.spec.height << "\n";
    out << "xllcorner " << dsm.spec.x0 << "\n";
    out << "yllcorner " << dsm.spec.y0 << "\n";
    out << "cellsize " << dsm.spec.cell << "\n";
    out << "NODATA_value " << Dsm::kNoData << "\n";
    for (int r = 0; r < dsm.spec.height; ++r) {
        for (int c = 0; c < dsm.spec.width; ++c) {
            if (c) out << " ";
            out << dsm.heights(r, c);
        }
        out << "\n";
    }
    if (!out) throw IoError("asc: write failed for " + file.string());
}

Dsm read_dsm_asc(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("asc: cannot open " + file.string());
    DsmSpec spec;
    double nodata = Dsm::kNoData;
    for (int i = 0; i < 6; ++i) {
        std::string key;
        in >> key;
        if (key == "ncols") in >> spec.width;
        else if (key == "nrows") in >> spec.height;
        else if (key == "xllcorner") in >> spec.x0;
        else if (key == "yllcorner") in >> spec.y0;
        else if (key == "cellsize") in >> spec.cell;
        else if (key == "NODATA_value") in >> nodata;
        else throw IoError("asc: unexpected header key '" + key + "' in " + file.string());
    }
    if (spec.width < 1 || spec.height < 1)
        throw IoError("asc: bad dimensions in " + file.string());
    Dsm dsm(spec);
    for (int r = 0; r < spec.height; ++r)
        for (int c = 0; c < spec.width; ++c) {
            double v;
            if (!(in >> v)) throw IoError("asc: truncated grid in " + file.string());
            dsm.heights(r, c) = (v == nodata) ? Dsm::kNoData : v;
        }
    return dsm;
}

void write_dsm_pfm(const Dsm& dsm, const std::filesystem::path& file) {
    FloatImage img(dsm.spec.width, dsm.spec.height);
    for (int r = 0; r < dsm.spec.height; ++r)
        for (int c = 0; c < dsm.spec.width; ++c)
            img.at(r, c) = static_cast<float>(dsm.heights(r, c));
    write_pfm(file, img);
}

}  // namespace satsurf
