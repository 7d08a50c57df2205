#include "satsurf/render.hpp"

#include <algorithm>
#include <cmath>

namespace satsurf {

void SamplerConfig::validate() const {
    if (n_total < 16 || n_total % 8 != 0)
        throw ValidationError("sampler: n_total must be a multiple of 8, >= 16");
    if (rounds < 0) throw ValidationError("sampler: rounds must be >= 0");
    if (s_base <= 0) throw ValidationError("sampler: s_base must be positive");
}

double alpha_from_sdf(double f_i, double f_next, double s) {
    const double u = 1.0 / (1.0 + std::exp(-s * f_i));
    const double w = 1.0 / (1.0 + std::exp(-s * f_next));
    return std::max((u - w) / u, 0.0);
}

CompositeResult composite(const VectorXd& alphas, const Matrix3Xd& colors, const VectorXd& ts) {
    const int n = static_cast<int>(alphas.size());
    if (n < 1 || colors.cols() != n || ts.size() != n)
        throw ValidationError("composite: inconsistent sample arrays");
    CompositeResult r;
    r.weights.resize(n);
    double transmittance = 1.0;
    for (int i = 0; i < n; ++i) {
        const double w = transmittance * alphas(i);
        r.weights(i) = w;
        r.color += w * colors.col(i);
        r.depth += w * ts(i);
        transmittance *= 1.0 - alphas(i);
    }
    r.weight_sum = 1.0 - transmittance;
    return r;
}

namespace {

Matrix3Xd positions_on_ray(const Ray& ray, const VectorXd& ts) {
    Matrix3Xd X(3, ts.size());
    for (int i = 0; i < ts.size(); ++i) X.col(i) = ray.point(ts(i));
    return X;
}

// Draw `count` stratified samples from the piecewise-constant density given by
// segment weights w_i over [t_i, t_{i+1}). Falls back to uniform over the full
// interval when all weights vanish.
void importance_draw(const VectorXd& ts, const VectorXd& w, int count, double t_near,
                     double t_far, RngStream& rng, std::vector<double>& out) {
    const int nseg = static_cast<int>(w.size());
    const double total = w.sum();
    if (total <= 1e-12 || nseg == 0) {
        for (int j = 0; j < count; ++j)
            out.push_back(t_near + (t_far - t_near) * (j + rng.uniform()) / count);
        return;
    }
    VectorXd cdf(nseg + 1);
    cdf(0) = 0.0;
    for (int i = 0; i < nseg; ++i) cdf(i + 1) = cdf(i) + w(i) / total;
    cdf(nseg) = 1.0;
    for (int j = 0; j < count; ++j) {
        const double u = (j + rng.uniform()) / count;
        int lo = 0, hi = nseg;
        while (lo + 1 < hi) {
            const int mid = (lo + hi) / 2;
            (cdf(mid) <= u ? lo : hi) = mid;
        }
        const double seg = cdf(lo + 1) - cdf(lo);
        const double frac = seg > 0.0 ? (u - cdf(lo)) / seg : 0.5;
        out.push_back(ts(lo) + frac * (ts(lo + 1) - ts(lo)));
    }
}

}  // namespace

VectorXd sample_ray(const Ray& ray, const SdfBatchFn& sdf, const SamplerConfig& cfg,
                    RngStream& rng) {
    cfg.validate();
    const int n_uniform = cfg.n_uniform();
    std::vector<double> ts;
    ts.reserve(cfg.n_total);
    for (int i = 0; i < n_uniform; ++i)
        ts.push_back(ray.t_near + (ray.t_far - ray.t_near) * (i + rng.uniform()) / n_uniform);
    std::sort(ts.begin(), ts.end());

    VectorXd t_cur = Eigen::Map<VectorXd>(ts.data(), ts.size());
    VectorXd f_cur;
    sdf(positions_on_ray(ray, t_cur), f_cur);

    double s = cfg.s_base;
    for (int round = 0; round < cfg.rounds; ++round) {
        const int n = static_cast<int>(t_cur.size());
        VectorXd w(n - 1);
        double transmittance = 1.0;
        for (int i = 0; i < n - 1; ++i) {
            const double a = alpha_from_sdf(f_cur(i), f_cur(i + 1), s);
            w(i) = transmittance * a;
            transmittance *= 1.0 - a;
        }
        std::vector<double> fresh;
        importance_draw(t_cur, w, cfg.per_round(), ray.t_near, ray.t_far, rng, fresh);
        std::sort(fresh.begin(), fresh.end());

        VectorXd t_new = Eigen::Map<VectorXd>(fresh.data(), fresh.size());
        VectorXd f_new;
        sdf(positions_on_ray(ray, t_new), f_new);

        // merge keeping (t, f) pairs aligned
        VectorXd t_merged(n + t_new.size()), f_merged(n + t_new.size());
        int a = 0, b = 0, k = 0;
        while (a < n || b < t_new.size()) {
            const bool take_old = b >= t_new.size() || (a < n && t_cur(a) <= t_new(b));
            if (take_old) {
                t_merged(k) = t_cur(a);
                f_merged(k) = f_cur(a);
                ++a;
            } else {
                t_merged(k) = t_new(b);
                f_merged(k) = f_new(b);
                ++b;
            }
            ++k;
        }
        t_cur = std::move(t_merged);
        f_cur = std::move(f_merged);
        s *= 2.0;
    }

    // enforce strictly increasing t (duplicate draws are possible in theory)
    for (int i = 1; i < t_cur.size(); ++i)
        if (t_cur(i) <= t_cur(i - 1))
            t_cur(i) = std::nextafter(t_cur(i - 1), std::numeric_limits<double>::infinity());
    return t_cur;
}

}  // namespace satsurf
