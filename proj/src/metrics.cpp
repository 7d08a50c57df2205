#include "satsurf/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace satsurf {

DsmDiffReport dsm_error_stats(const Dsm& pred, const Dsm& truth, bool align_median) {
    const DsmSpec& a = pred.spec;
    const DsmSpec& b = truth.spec;
    if (a.width != b.width || a.height != b.height || std::fabs(a.cell - b.cell) > 1e-9 ||
        std::fabs(a.x0 - b.x0) > 1e-6 || std::fabs(a.y0 - b.y0) > 1e-6)
        throw GridMismatchError("dsm_error_stats: grids differ in origin, cell size or shape");

    DsmDiffReport rep;
    rep.coverage_pred = pred.valid_fraction();
    rep.coverage_truth = truth.valid_fraction();
    rep.error_grid = MatrixXd::Constant(a.height, a.width, Dsm::kNoData);

    std::vector<double> signed_diffs;
    signed_diffs.reserve(std::size_t(a.width) * a.height);
    for (int r = 0; r < a.height; ++r)
        for (int c = 0; c < a.width; ++c)
            if (pred.valid(r, c) && truth.valid(r, c))
                signed_diffs.push_back(pred.heights(r, c) - truth.heights(r, c));
    if (signed_diffs.empty()) throw NoOverlapError("dsm_error_stats: no jointly valid cells");

    double shift = 0.0;
    if (align_median) {
        std::vector<double> tmp = signed_diffs;
        const std::size_t mid = tmp.size() / 2;
        std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
        shift = tmp[mid];
        if (tmp.size() % 2 == 0)
            shift = 0.5 * (shift + *std::max_element(tmp.begin(), tmp.begin() + mid));
    }

    std::vector<double> abs_diffs;
    abs_diffs.reserve(signed_diffs.size());
    for (int r = 0, k = 0; r < a.height; ++r)
        for (int c = 0; c < a.width; ++c)
            if (pred.valid(r, c) && truth.valid(r, c)) {
                const double e = std::fabs(signed_diffs[k++] - shift);
                abs_diffs.push_back(e);
                rep.error_grid(r, c) = e;
            }

    rep.valid_cells = static_cast<std::int64_t>(abs_diffs.size());
    rep.mae = pairwise_sum(abs_diffs) / static_cast<double>(abs_diffs.size());
    std::vector<double> tmp = abs_diffs;
    const std::size_t mid = tmp.size() / 2;
    std::nth_element(tmp.begin(), tmp.begin() + mid, tmp.end());
    rep.med = tmp[mid];
    if (tmp.size() % 2 == 0)
        rep.med = 0.5 * (rep.med + *std::max_element(tmp.begin(), tmp.begin() + mid));
    return rep;
}

std::vector<Vec3> dsm_to_points(const Dsm& dsm) {
    std::vector<Vec3> pts;
    for (int r = 0; r < dsm.spec.height; ++r)
        for (int c = 0; c < dsm.spec.width; ++c)
            if (dsm.valid(r, c))
                pts.emplace_back(dsm.spec.cell_center_x(c), dsm.spec.cell_center_y(r),
                                 dsm.heights(r, c));
    return pts;
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw EmptySetError("KdTree3: empty point set");
    nodes_.reserve(2 * points_.size() / 8 + 8);
    nodes_.emplace_back();
    build(0, 0, static_cast<int>(points_.size()), 0);
}

void KdTree3::build(int node, int begin, int end, int depth) {
    constexpr int kLeafSize = 8;
    if (end - begin <= kLeafSize) {
        nodes_[node].axis = -1;
        nodes_[node].begin = begin;
        nodes_[node].end = end;
        return;
    }
    // split on the widest axis at the median
    Vec3 lo = points_[begin], hi = points_[begin];
    for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[i]);
        hi = hi.cwiseMax(points_[i]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                     [axis](const Vec3& p, const Vec3& q) { return p[axis] < q[axis]; });
    nodes_[node].axis = axis;
    nodes_[node].split = points_[mid][axis];
    const int left = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[node].left = left;
    nodes_[node].right = left + 1;
    build(left, begin, mid, depth + 1);
    build(left + 1, mid, end, depth + 1);
}

void KdTree3::search(int node, const Vec3& q, double& best) const {
    const Node& nd = nodes_[node];
    if (nd.axis < 0) {
        for (int i = nd.begin; i < nd.end; ++i)
            best = std::min(best, (points_[i] - q).squaredNorm());
        return;
    }
    const double d = q[nd.axis] - nd.split;
    const int near = d < 0 ? nd.left : nd.right;
    const int far = d < 0 ? nd.right : nd.left;
    search(near, q, best);
    if (d * d < best) search(far, q, best);
}

double KdTree3::nearest_squared(const Vec3& query) const {
    double best = std::numeric_limits<double>::infinity();
    search(0, query, best);
    return best;
}

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty()) throw EmptySetError("chamfer: empty point set");
    const KdTree3 tree_a(std::vector<Vec3>(a.begin(), a.end()));
    const KdTree3 tree_b(std::vector<Vec3>(b.begin(), b.end()));

    std::vector<double> da(a.size()), db(b.size());
    parallel_for(static_cast<std::int64_t>(a.size()),
                 [&](std::int64_t i, int) { da[i] = tree_b.nearest_squared(a[i]); });
    parallel_for(static_cast<std::int64_t>(b.size()),
                 [&](std::int64_t i, int) { db[i] = tree_a.nearest_squared(b[i]); });
    return pairwise_sum(da) / static_cast<double>(a.size()) +
           pairwise_sum(db) / static_cast<double>(b.size());
}

}  // namespace satsurf
