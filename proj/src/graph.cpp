#include "satsurf/graph.hpp"

#include <cmath>

namespace satsurf {

namespace {

Matrix3Xd bundle_positions(const Ray& ray, const VectorXd& ts, double eps) {
    const int n = static_cast<int>(ts.size());
    Matrix3Xd X(3, 7 * n);
    for (int i = 0; i < n; ++i) X.col(i) = ray.point(ts(i));
    for (int k = 0; k < 3; ++k) {
        for (int sign = 0; sign < 2; ++sign) {
            const int block = n * (1 + 2 * k + sign);
            const double delta = sign == 0 ? eps : -eps;
            for (int i = 0; i < n; ++i) {
                Vec3 p = X.col(i);
                p[k] += delta;
                X.col(block + i) = p;
            }
        }
    }
    return X;
}

Matrix3Xd stencil6(const Vec3& p, double eps) {
    Matrix3Xd X(3, 6);
    for (int k = 0; k < 3; ++k) {
        X.col(2 * k) = p;
        X.col(2 * k)[k] += eps;
        X.col(2 * k + 1) = p;
        X.col(2 * k + 1)[k] -= eps;
    }
    return X;
}

Vec3 grad_cols(const VectorXd& f, int base, double eps) {
    return {(f(base) - f(base + 1)) / (2 * eps), (f(base + 2) - f(base + 3)) / (2 * eps),
            (f(base + 4) - f(base + 5)) / (2 * eps)};
}

void forward_one(const FieldEvaluator& ev, const RayBundle& bundle, const VectorXd& ts,
                 const GraphOptions& opts, RayTape& tape) {
    const FieldConfig& cfg = ev.params().config();
    const int n = static_cast<int>(ts.size());
    if (n < 2) throw ValidationError("render: need at least 2 samples per ray");
    const double eps = ev.gradient_step();
    tape.ts = ts;
    tape.eps = eps;

    ev.eval_sdf(bundle_positions(bundle.center, ts, eps), n - 1, tape.main);

    tape.grads.resize(3, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k)
            tape.grads(k, i) =
                (tape.main.f(n * (1 + 2 * k) + i) - tape.main.f(n * (2 + 2 * k) + i)) / (2 * eps);

    // color head over the leading sample of each interval
    const int dd = cfg.dir_embed_dim();
    MatrixXd cin(cfg.color_input_dim(), n - 1);
    VectorXd embed_view(dd), embed_sun(dd);
    ev.embed_dir(bundle.center.dir, {embed_view.data(), static_cast<std::size_t>(dd)});
    ev.embed_dir(bundle.sup.sun_dir, {embed_sun.data(), static_cast<std::size_t>(dd)});
    for (int i = 0; i < n - 1; ++i) {
        cin.block(cfg.col_x(), i, 3, 1) = tape.main.X.col(i);
        cin.block(cfg.col_grad(), i, 3, 1) = tape.grads.col(i);
        cin.block(cfg.col_feat(), i, cfg.geo_feature_dim, 1) = tape.main.feat.col(i);
        cin.block(cfg.col_view(), i, dd, 1) = embed_view;
        cin.block(cfg.col_sun(), i, dd, 1) = embed_sun;
    }
    ev.eval_color(cin, tape.color);

    const double s = ev.s();
    tape.alphas.resize(n - 1);
    for (int i = 0; i < n - 1; ++i)
        tape.alphas(i) = alpha_from_sdf(tape.main.f(i), tape.main.f(i + 1), s);

    const CompositeResult comp = composite(tape.alphas, tape.color.rgb, ts.head(n - 1));
    tape.render.color = comp.color;
    tape.render.depth = comp.depth;
    tape.render.weight_sum = comp.weight_sum;
    tape.render.weights = comp.weights;

    tape.normal_active =
        bundle.sup.normal_valid && tape.render.weight_sum > opts.opacity_gate;
    if (tape.normal_active) {
        Matrix3Xd X(3, 30);
        X.leftCols(6) = stencil6(bundle.center.point(tape.render.depth), eps);
        for (int j = 0; j < 4; ++j)
            X.middleCols(6 * (j + 1), 6) =
                stencil6(bundle.neighbors[j].point(tape.render.depth), eps);
        ev.eval_sdf(X, 0, tape.surface);
        for (int j = 0; j < 5; ++j)
            tape.surface_grads[j] = grad_cols(tape.surface.f, 6 * j, eps);
        tape.delta_pred = delta_pred(tape.surface_grads[0],
                                     std::span<const Vec3>(tape.surface_grads.data() + 1, 4));
        tape.render.normal = tape.surface_grads[0];
    } else {
        // diagnostics only; not on the tape for any loss
        ev.eval_sdf(stencil6(bundle.center.point(tape.render.depth), eps), 0, tape.surface);
        tape.render.normal = grad_cols(tape.surface.f, 0, eps);
    }
}

BatchLosses collect_losses(const std::vector<RayTape>& tapes, const RayBatch& batch,
                           const LossWeights& weights) {
    const int K = static_cast<int>(tapes.size());
    BatchLosses out;
    out.rays = K;
    if (K == 0) return out;

    std::vector<double> color_terms(K), depth_terms(K);
    std::vector<double> normal_terms;
    std::vector<double> eik_terms;
    for (int r = 0; r < K; ++r) {
        const RayTape& t = tapes[r];
        const PixelSupervision& sup = batch[r].sup;
        color_terms[r] = (t.render.color - sup.color).cwiseAbs().sum();
        depth_terms[r] =
            sup.depth_valid ? std::fabs(t.render.depth - sup.depth) : 0.0;
        if (sup.depth_valid) ++out.depth_rays;
        if (t.normal_active) {
            const double d = t.delta_pred - sup.delta_gt;
            normal_terms.push_back(d * d);
        }
        const int n = static_cast<int>(t.ts.size());
        for (int i = 0; i < n; ++i) {
            const double d = t.grads.col(i).norm() - 1.0;
            eik_terms.push_back(d * d);
        }
    }
    out.color = pairwise_sum(color_terms) / K;
    out.depth = pairwise_sum(depth_terms) / K;
    out.normal_pixels = static_cast<int>(normal_terms.size());
    out.normal = out.normal_pixels > 0
                     ? pairwise_sum(normal_terms) / out.normal_pixels
                     : 0.0;
    out.eikonal_samples = static_cast<long>(eik_terms.size());
    out.eikonal = out.eikonal_samples > 0
                      ? pairwise_sum(eik_terms) / static_cast<double>(out.eikonal_samples)
                      : 0.0;
    out.total = out.combine(weights);
    if (!std::isfinite(out.total))
        throw NonFiniteError("forward_batch: non-finite loss (diverged training?)");
    return out;
}

BatchForward run_forward(const ParameterStore& params, double lambda, const RayBatch& batch,
                         const GraphOptions& opts, const LossWeights& weights,
                         const std::function<VectorXd(int, const FieldEvaluator&)>& sampler_for) {
    BatchForward fwd;
    fwd.lambda = lambda;
    fwd.tapes.resize(batch.size());
    const FieldEvaluator ev(params, lambda);
    parallel_for(static_cast<std::int64_t>(batch.size()), [&](std::int64_t r, int) {
        const VectorXd ts = sampler_for(static_cast<int>(r), ev);
        forward_one(ev, batch[r], ts, opts, fwd.tapes[r]);
    });
    fwd.losses = collect_losses(fwd.tapes, batch, weights);
    return fwd;
}

}  // namespace

BatchForward forward_batch(const ParameterStore& params, double lambda, const RayBatch& batch,
                           const GraphOptions& opts, const LossWeights& weights,
                           std::uint64_t seed, std::uint64_t iteration) {
    return run_forward(params, lambda, batch, opts, weights,
                       [&](int r, const FieldEvaluator& ev) {
                           RngStream rng(derive_seed(seed, iteration, 0x5A3F00 + r));
                           const SdfBatchFn fn = [&ev](const Matrix3Xd& X, VectorXd& f) {
                               ev.sdf_values(X, f);
                           };
                           return sample_ray(batch[r].center, fn, opts.sampler, rng);
                       });
}

BatchForward forward_batch_fixed(const ParameterStore& params, double lambda,
                                 const RayBatch& batch, const GraphOptions& opts,
                                 const LossWeights& weights,
                                 const std::vector<VectorXd>& samples) {
    if (samples.size() != batch.size())
        throw ValidationError("forward_batch_fixed: samples/batch size mismatch");
    return run_forward(params, lambda, batch, opts, weights,
                       [&](int r, const FieldEvaluator&) { return samples[r]; });
}

namespace {

// d(cos(a,b)) contributions for both arguments.
void cos_backward(const Vec3& a, const Vec3& b, double dcos, Vec3& da, Vec3& db) {
    const double na = a.norm(), nb = b.norm();
    const double denom = na * nb;
    if (denom <= 0.0) return;
    const double c = a.dot(b) / denom;
    da += dcos * (b / denom - c * a / (na * na));
    db += dcos * (a / denom - c * b / (nb * nb));
}

struct BackwardScale {
    double color_per_ray = 0;   // sel.color / K
    double depth_per_ray = 0;   // sel.depth / K
    double normal_per_pix = 0;  // sel.normal / K_normal
    double eik_per_sample = 0;  // sel.eikonal / total samples
};

void backward_one(const FieldEvaluator& ev, const RayBundle& bundle, const RayTape& tape,
                  const BackwardScale& sc, std::span<double> grad) {
    const FieldConfig& cfg = ev.params().config();
    const int n = static_cast<int>(tape.ts.size());
    const double eps = tape.eps;
    const double s = ev.s();
    const PixelSupervision& sup = bundle.sup;

    auto sign = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };

    Vec3 dC;
    for (int k = 0; k < 3; ++k)
        dC[k] = sc.color_per_ray * sign(tape.render.color[k] - sup.color[k]);
    double dD = sup.depth_valid
                    ? sc.depth_per_ray * sign(tape.render.depth - sup.depth)
                    : 0.0;

    Matrix3Xd dgrads = Matrix3Xd::Zero(3, n);
    if (sc.eik_per_sample != 0.0) {
        for (int i = 0; i < n; ++i) {
            const Vec3 g = tape.grads.col(i);
            const double nm = g.norm();
            if (nm > 0.0) dgrads.col(i) += sc.eik_per_sample * 2.0 * (nm - 1.0) / nm * g;
        }
    }

    // Normal consistency: gradients at the five surface probes, then the
    // positional path back into the rendered depth.
    if (tape.normal_active && sc.normal_per_pix != 0.0) {
        const double ddelta = sc.normal_per_pix * 2.0 * (tape.delta_pred - sup.delta_gt);
        std::array<Vec3, 5> dg;
        for (auto& g : dg) g.setZero();
        for (int j = 1; j < 5; ++j)
            cos_backward(tape.surface_grads[0], tape.surface_grads[j], ddelta / 4.0, dg[0],
                         dg[j]);
        VectorXd df_surf = VectorXd::Zero(30);
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 3; ++k) {
                df_surf(6 * j + 2 * k) += dg[j][k] / (2 * eps);
                df_surf(6 * j + 2 * k + 1) -= dg[j][k] / (2 * eps);
            }
        Matrix3Xd dX = Matrix3Xd::Zero(3, 30);
        ev.backward_sdf(tape.surface, df_surf, MatrixXd(cfg.geo_feature_dim, 0), grad, &dX);
        double dt = 0.0;
        for (int c = 0; c < 6; ++c) dt += dX.col(c).dot(bundle.center.dir);
        for (int j = 0; j < 4; ++j)
            for (int c = 0; c < 6; ++c)
                dt += dX.col(6 * (j + 1) + c).dot(bundle.neighbors[j].dir);
        dD += dt;
    }

    // compositing: w_i = T_i alpha_i, C = sum w_i c_i, D = sum w_i t_i
    const int m = n - 1;
    VectorXd gw(m);
    Matrix3Xd drgb(3, m);
    for (int i = 0; i < m; ++i) {
        gw(i) = dC.dot(tape.color.rgb.col(i)) + dD * tape.ts(i);
        drgb.col(i) = tape.render.weights(i) * dC;
    }
    VectorXd dalpha(m);
    {
        // dL/dalpha_i = T_i (g_i - H_i), H_i = sum_{k>i} g_k alpha_k prod_{i<j<k}(1-alpha_j)
        double H = 0.0;
        VectorXd T(m);
        double trans = 1.0;
        for (int i = 0; i < m; ++i) {
            T(i) = trans;
            trans *= 1.0 - tape.alphas(i);
        }
        for (int i = m - 1; i >= 0; --i) {
            dalpha(i) = T(i) * (gw(i) - H);
            H = gw(i) * tape.alphas(i) + (1.0 - tape.alphas(i)) * H;
        }
    }

    VectorXd df = VectorXd::Zero(7 * n);
    double dsigma = 0.0;
    for (int i = 0; i < m; ++i) {
        const double fi = tape.main.f(i), fn = tape.main.f(i + 1);
        const double r = 1.0 - (1.0 / (1.0 + std::exp(-s * fn))) * (1.0 + std::exp(-s * fi));
        if (tape.alphas(i) <= 0.0 && r <= 0.0) continue;  // clamped branch
        const double u = 1.0 / (1.0 + std::exp(-s * fi));
        const double w = 1.0 / (1.0 + std::exp(-s * fn));
        const double du = dalpha(i) * w / (u * u);
        const double dw = -dalpha(i) / u;
        df(i) += du * s * u * (1.0 - u);
        df(i + 1) += dw * s * w * (1.0 - w);
        double ds = du * fi * u * (1.0 - u) + dw * fn * w * (1.0 - w);
        dsigma += ds * s;
    }
    grad[ev.params().layout().sigma.off] += dsigma;

    // color head backward; x/view/sun rows are fixed inputs
    MatrixXd dCin;
    ev.backward_color(tape.color, drgb, grad, &dCin);
    for (int i = 0; i < m; ++i) dgrads.col(i) += dCin.block(cfg.col_grad(), i, 3, 1);
    const MatrixXd dfeat = dCin.middleRows(cfg.col_feat(), cfg.geo_feature_dim);

    // scatter gradient adjoints into the stencil blocks
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) {
            df(n * (1 + 2 * k) + i) += dgrads(k, i) / (2 * eps);
            df(n * (2 + 2 * k) + i) -= dgrads(k, i) / (2 * eps);
        }

    ev.backward_sdf(tape.main, df, dfeat, grad, nullptr);
}

}  // namespace

void backward_batch(const ParameterStore& params, const BatchForward& fwd, const RayBatch& batch,
                    const LossSelector& sel, std::span<double> grad) {
    const int K = static_cast<int>(batch.size());
    if (K == 0) return;
    if (fwd.tapes.size() != batch.size())
        throw ValidationError("backward_batch: forward/batch size mismatch");

    BackwardScale sc;
    sc.color_per_ray = sel.color / K;
    sc.depth_per_ray = sel.depth / K;
    sc.normal_per_pix =
        fwd.losses.normal_pixels > 0 ? sel.normal / fwd.losses.normal_pixels : 0.0;
    sc.eik_per_sample = fwd.losses.eikonal_samples > 0
                            ? sel.eikonal / static_cast<double>(fwd.losses.eikonal_samples)
                            : 0.0;

    const FieldEvaluator ev(params, fwd.lambda);
    const int workers = std::min<int>(thread_count(), K);
    const std::int64_t psize = params.size();
    // 64-byte-aligned accumulation buffers: Eigen's packed kernels peel by
    // destination alignment, so unaligned buffers would make the bit pattern
    // depend on where the allocator placed them
    std::vector<VectorXd> buffers(workers);
    parallel_for(K, [&](std::int64_t r, int w) {
        if (buffers[w].size() == 0) buffers[w] = VectorXd::Zero(psize);
        std::span<double> view(buffers[w].data(), static_cast<std::size_t>(psize));
        backward_one(ev, batch[r], fwd.tapes[r], sc, view);
    });
    for (int w = 0; w < workers; ++w) {
        if (buffers[w].size() == 0) continue;
        Eigen::Map<VectorXd> acc(grad.data(), psize);
        acc += buffers[w];
    }
}

}  // namespace satsurf
