#pragma once

#include <array>

#include "satsurf/geometry.hpp"
#include "satsurf/render.hpp"

namespace satsurf {

struct TriangleMesh {
    enum class Frame { Canonical, Utm };
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    Frame frame = Frame::Canonical;
};

// Standard 256-case marching cubes over a uniform grid on [-1,1]^3 with
// `resolution` cells per axis; vertices placed by linear interpolation along
// edges and welded exactly through shared-edge indexing.
// Throws EmptySurfaceError when the field has no sign change.
TriangleMesh marching_cubes(const SdfBatchFn& sdf, int resolution, double iso = 0.0);

// Same, from precomputed grid values (resolution+1)^3, x-fastest layout.
TriangleMesh marching_cubes_grid(const std::vector<double>& values, int resolution,
                                 double iso = 0.0);

void mesh_to_utm(TriangleMesh& mesh, const SceneBounds& bounds);

void write_ply(const TriangleMesh& mesh, const std::filesystem::path& file);
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& file);

struct DsmSpec {
    double x0 = 0, y0 = 0;  // lower-left corner (UTM metres)
    double cell = 0.5;
    int width = 0, height = 0;

    double cell_center_x(int col) const { return x0 + (col + 0.5) * cell; }
    double cell_center_y(int row) const { return y0 + (height - row - 0.5) * cell; }

    bool operator==(const DsmSpec&) const = default;
};

struct Dsm {
    static constexpr double kNoData = -9999.0;
    DsmSpec spec;
    MatrixXd heights;  // row 0 = north edge

    explicit Dsm(DsmSpec s = {})
        : spec(s), heights(MatrixXd::Constant(std::max(s.height, 0), std::max(s.width, 0),
                                              kNoData)) {}

    bool valid(int row, int col) const { return heights(row, col) != kNoData; }
    double valid_fraction() const;
};

// Per-cell maximum altitude among intersections of the cell-center vertical
// with mesh triangles; optional inverse-distance fill of NoData cells.
Dsm rasterize_dsm(const TriangleMesh& mesh, const DsmSpec& spec, bool fill_nodata = false,
                  int fill_radius = 5);

// ESRI ASCII grid with a NODATA_value header.
void write_dsm_asc(const Dsm& dsm, const std::filesystem::path& file);
Dsm read_dsm_asc(const std::filesystem::path& file);
// lossless float exchange (row 0 = north, like the in-memory layout)
void write_dsm_pfm(const Dsm& dsm, const std::filesystem::path& file);

}  // namespace satsurf
