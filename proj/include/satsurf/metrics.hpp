#pragma once

#include <span>

#include "satsurf/extract.hpp"

namespace satsurf {

struct DsmDiffReport {
    double mae = 0, med = 0;
    std::int64_t valid_cells = 0;
    double coverage_pred = 0, coverage_truth = 0;
    MatrixXd error_grid;  // |pred - truth|, NoData where either input is
};

// MAE/MED over cells valid in both grids. align_median subtracts the median
// signed offset first. Throws GridMismatchError / NoOverlapError.
DsmDiffReport dsm_error_stats(const Dsm& pred, const Dsm& truth, bool align_median = false);

// One point per valid cell: (center x, center y, height).
std::vector<Vec3> dsm_to_points(const Dsm& dsm);

// Exact nearest-neighbor k-d tree over 3D points.
class KdTree3 {
public:
    explicit KdTree3(std::vector<Vec3> points);
    double nearest_squared(const Vec3& query) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        int axis = -1;          // -1 = leaf
        double split = 0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf point range
    };
    void build(int node, int begin, int end, int depth);
    void search(int node, const Vec3& q, double& best) const;

    std::vector<Vec3> points_;
    std::vector<Node> nodes_;
};

// Symmetric mean squared nearest-neighbor distance (exact).
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

}  // namespace satsurf
