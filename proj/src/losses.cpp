#include "satsurf/losses.hpp"

#include <cmath>

namespace satsurf {

double color_loss(const Matrix3Xd& rendered, const Matrix3Xd& truth) {
    if (rendered.cols() != truth.cols())
        throw ValidationError("color_loss: batch length mismatch");
    const int n = static_cast<int>(rendered.cols());
    if (n == 0) return 0.0;
    std::vector<double> per_ray(n);
    for (int i = 0; i < n; ++i)
        per_ray[i] = (rendered.col(i) - truth.col(i)).cwiseAbs().sum();
    return pairwise_sum(per_ray) / n;
}

double eikonal_loss(std::span<const Vec3> gradients) {
    if (gradients.empty()) return 0.0;
    std::vector<double> terms(gradients.size());
    for (std::size_t i = 0; i < gradients.size(); ++i) {
        const double d = gradients[i].norm() - 1.0;
        terms[i] = d * d;
    }
    return pairwise_sum(terms) / static_cast<double>(gradients.size());
}

double depth_loss(std::span<const double> rendered, std::span<const double> target,
                  std::span<const std::uint8_t> mask) {
    if (rendered.size() != target.size() || rendered.size() != mask.size())
        throw ValidationError("depth_loss: batch length mismatch");
    const std::size_t n = rendered.size();
    if (n == 0) return 0.0;
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i)
        terms[i] = mask[i] ? std::fabs(rendered[i] - target[i]) : 0.0;
    return pairwise_sum(terms) / static_cast<double>(n);
}

double delta_pred(const Vec3& center, std::span<const Vec3> neighbors) {
    if (neighbors.empty()) throw ValidationError("delta_pred: no neighbors");
    const double cn = center.norm();
    double acc = 0.0;
    for (const Vec3& g : neighbors) {
        const double denom = cn * g.norm();
        acc += denom > 0.0 ? center.dot(g) / denom : 0.0;
    }
    return acc / static_cast<double>(neighbors.size());
}

double normal_loss(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) throw ValidationError("normal_loss: batch length mismatch");
    if (pred.empty()) return 0.0;
    std::vector<double> terms(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        terms[i] = d * d;
    }
    return pairwise_sum(terms) / static_cast<double>(pred.size());
}

double total_loss(const BatchLosses& parts, const LossWeights& w) {
    const double t = parts.combine(w);
    if (!std::isfinite(t)) throw NonFiniteError("total_loss: non-finite value");
    return t;
}

}  // namespace satsurf
