#include "satsurf/priors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace satsurf {

std::vector<SparseObservation> read_sparse_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("sparse csv: cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("sparse csv: empty file " + file.string());
    if (line.find("u") == std::string::npos || line.find("reproj_error") == std::string::npos)
        throw IoError("sparse csv: missing header row in " + file.string());
    std::vector<SparseObservation> obs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        SparseObservation o;
        if (ls >> o.u >> o.v >> o.lon >> o.lat >> o.alt >> o.reproj_error) obs.push_back(o);
    }
    return obs;
}

void write_sparse_csv(const std::filesystem::path& file, std::span<const SparseObservation> obs) {
    std::ofstream out(file);
    if (!out) throw IoError("sparse csv: cannot write " + file.string());
    out << "u,v,lon,lat,alt,reproj_error\n";
    out.precision(17);
    for (const auto& o : obs)
        out << o.u << "," << o.v << "," << o.lon << "," << o.lat << "," << o.alt << ","
            << o.reproj_error << "\n";
}

double reparameterize_sparse_depth(const SparseObservation& obs, const RpcModel& model,
                                   const SceneBounds& bounds) {
    const double u = std::round(obs.u);
    const double v = std::round(obs.v);
    const double margin = 10.0;
    const Vec2 at_point = rpc_localize(model, u, v, obs.alt);
    const Vec2 at_ref = rpc_localize(model, u, v, bounds.alt_ref_upper());
    const Vec3 p = bounds.canonical_from_geodetic(at_point[0], at_point[1], obs.alt, margin);
    const Vec3 ref =
        bounds.canonical_from_geodetic(at_ref[0], at_ref[1], bounds.alt_ref_upper(), margin);
    return (p - ref).norm();
}

std::vector<double> fit_weights_from_reproj(std::span<const double> reproj_errors) {
    std::vector<double> w(reproj_errors.size(), 1.0);
    if (reproj_errors.empty()) return w;
    std::vector<double> sorted(reproj_errors.begin(), reproj_errors.end());
    std::sort(sorted.begin(), sorted.end());
    // nearest-rank 95th percentile
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * sorted.size()));
    rank = rank > 0 ? rank - 1 : 0;
    const double e95 = sorted[std::min(rank, sorted.size() - 1)];
    if (e95 <= 0.0) return w;  // all errors zero: full confidence
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = std::clamp(1.0 - reproj_errors[i] / e95, 0.05, 1.0);
    return w;
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (m + lo);
    }
    return m;
}

}  // namespace

FitResult fit_scale_offset(std::span<const double> sparse_depth,
                           std::span<const double> relative,
                           std::span<const double> weight, FitForm form) {
    const std::size_t n = sparse_depth.size();
    if (relative.size() != n || weight.size() != n)
        throw ValidationError("fit_scale_offset: array length mismatch");
    if (n < 2) throw DegenerateFitError("fit_scale_offset: need at least 2 observations");

    // weighted variance of the relative depths decides solvability
    double wsum = 0, rmean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += weight[i];
        rmean += weight[i] * relative[i];
    }
    if (wsum <= 0) throw DegenerateFitError("fit_scale_offset: zero total weight");
    rmean /= wsum;
    double rvar = 0;
    for (std::size_t i = 0; i < n; ++i)
        rvar += weight[i] * (relative[i] - rmean) * (relative[i] - rmean);
    rvar /= wsum;
    if (rvar < 1e-12)
        throw DegenerateFitError("fit_scale_offset: relative depths are constant at sparse pixels");

    // 2x2 normal equations: conventional weights the residual, literal scales
    // the target and drops the residual weight.
    double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = relative[i];
        const double w = form == FitForm::Conventional ? weight[i] : 1.0;
        const double y = form == FitForm::Conventional ? sparse_depth[i]
                                                       : weight[i] * sparse_depth[i];
        a00 += w * r * r;
        a01 += w * r;
        a11 += w;
        b0 += w * r * y;
        b1 += w * y;
    }
    const double det = a00 * a11 - a01 * a01;
    if (std::fabs(det) < 1e-300)
        throw DegenerateFitError("fit_scale_offset: singular normal equations");

    FitResult fit;
    fit.scale = (b0 * a11 - b1 * a01) / det;
    fit.offset = (-b0 * a01 + b1 * a00) / det;
    fit.n_points = static_cast<int>(n);

    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = form == FitForm::Conventional ? sparse_depth[i]
                                                       : weight[i] * sparse_depth[i];
        residuals[i] = std::fabs(y - (fit.scale * relative[i] + fit.offset));
    }
    fit.residual_mean = pairwise_sum(residuals) / static_cast<double>(n);
    fit.residual_median = median_of(residuals);
    return fit;
}

NormalMap normals_from_depth(const FloatImage& rel, double pixel_pitch) {
    const int H = rel.height, W = rel.width;
    if (H < 3 || W < 3) throw ValidationError("normals_from_depth: image too small");
    NormalMap map;
    map.width = W;
    map.height = H;
    map.normals.resize(std::size_t(H) * W * 3);
    map.delta.resize(std::size_t(H) * W);

    for (int u = 0; u < H; ++u) {
        for (int v = 0; v < W; ++v) {
            double du, dv;
            if (u == 0)
                du = (rel.at(1, v) - rel.at(0, v)) / pixel_pitch;
            else if (u == H - 1)
                du = (rel.at(H - 1, v) - rel.at(H - 2, v)) / pixel_pitch;
            else
                du = (rel.at(u + 1, v) - rel.at(u - 1, v)) / (2.0 * pixel_pitch);
            if (v == 0)
                dv = (rel.at(u, 1) - rel.at(u, 0)) / pixel_pitch;
            else if (v == W - 1)
                dv = (rel.at(u, W - 1) - rel.at(u, W - 2)) / pixel_pitch;
            else
                dv = (rel.at(u, v + 1) - rel.at(u, v - 1)) / (2.0 * pixel_pitch);
            Vec3 n(-du, -dv, 1.0);
            if (!n.allFinite()) n = Vec3(0, 0, 1);
            map.set_normal(u, v, n.normalized());
        }
    }
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v)
            map.delta[std::size_t(u) * W + v] = static_cast<float>(gt_consistency(map, u, v));
    return map;
}

double gt_consistency(const NormalMap& map, int u, int v) {
    static constexpr int kOffsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    const Vec3 n = map.normal(u, v);
    const double nn = n.norm();
    double acc = 0;
    int count = 0;
    for (const auto& off : kOffsets) {
        const int uu = u + off[0], vv = v + off[1];
        if (uu < 0 || uu >= map.height || vv < 0 || vv >= map.width) continue;
        const Vec3 m = map.normal(uu, vv);
        const double denom = nn * m.norm();
        acc += denom > 0 ? n.dot(m) / denom : 0.0;
        ++count;
    }
    if (count == 0) throw ValidationError("gt_consistency: pixel has no in-bounds neighbors");
    return acc / count;
}

FusedDepthMap fuse_depth(const FloatImage& relative_raw,
                         std::span<const std::uint8_t> valid_mask,
                         std::span<const SparseObservation> obs, const RpcModel& model,
                         const SceneBounds& bounds, FitForm form) {
    const int H = relative_raw.height, W = relative_raw.width;
    const std::size_t npix = std::size_t(H) * W;
    if (!valid_mask.empty() && valid_mask.size() != npix)
        throw ValidationError("fuse_depth: mask size mismatch");

    FusedDepthMap out;
    out.mask.assign(npix, 1);
    if (!valid_mask.empty())
        std::copy(valid_mask.begin(), valid_mask.end(), out.mask.begin());
    for (std::size_t i = 0; i < npix; ++i)
        if (!std::isfinite(relative_raw.data[i])) out.mask[i] = 0;

    // min-max normalization over valid pixels
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < npix; ++i) {
        if (!out.mask[i]) continue;
        lo = std::min(lo, relative_raw.data[i]);
        hi = std::max(hi, relative_raw.data[i]);
    }
    if (!(hi > lo))
        throw DegenerateFitError("fuse_depth: relative depth map has no spread over valid pixels");
    out.relative = FloatImage(W, H);
    for (std::size_t i = 0; i < npix; ++i)
        out.relative.data[i] = (relative_raw.data[i] - lo) / (hi - lo);

    std::vector<double> depths, rels, errs;
    for (const auto& o : obs) {
        const int u = static_cast<int>(std::lround(o.u));
        const int v = static_cast<int>(std::lround(o.v));
        if (u < 0 || u >= H || v < 0 || v >= W) {
            ++out.dropped_observations;
            continue;
        }
        if (!out.mask[std::size_t(u) * W + v]) {
            ++out.dropped_observations;
            continue;
        }
        try {
            depths.push_back(reparameterize_sparse_depth(o, model, bounds));
        } catch (const std::exception& e) {
            std::fprintf(stderr, "warning: dropping sparse point (%g, %g): %s\n", o.u, o.v,
                         e.what());
            ++out.dropped_observations;
            continue;
        }
        rels.push_back(out.relative.at(u, v));
        errs.push_back(o.reproj_error);
    }
    const std::vector<double> weights = fit_weights_from_reproj(errs);
    out.fit = fit_scale_offset(depths, rels, weights, form);

    out.absolute = FloatImage(W, H);
    for (std::size_t i = 0; i < npix; ++i)
        out.absolute.data[i] =
            static_cast<float>(out.fit.scale * out.relative.data[i] + out.fit.offset);
    return out;
}

}  // namespace satsurf
