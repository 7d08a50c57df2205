#include "satsurf/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace satsurf {

namespace {

using Eigen::Map;

// z.max(0) + log(1 + exp(-|z|)): stable softplus (log instead of log1p keeps
// the whole expression on SIMD paths; the tail difference is ~1e-17 absolute)
template <typename Derived>
void softplus_inplace(Eigen::MatrixBase<Derived>& z) {
    z = z.array().max(0.0).matrix() +
        (1.0 + (-z.array().abs()).exp()).log().matrix();
}

// softplus'(z) from the activation a = softplus(z): sigmoid(z) = 1 - exp(-a)
inline MatrixXd softplus_grad_from_act(const MatrixXd& a) {
    return (1.0 - (-a.array()).exp()).matrix();
}

Map<const MatrixXd> cmap(const std::vector<double>& v, Block b, int rows, int cols) {
    return Map<const MatrixXd>(v.data() + b.off, rows, cols);
}
Map<const VectorXd> cvec(const std::vector<double>& v, Block b) {
    return Map<const VectorXd>(v.data() + b.off, b.n);
}
Map<MatrixXd> gmap(std::span<double> g, Block b, int rows, int cols) {
    return Map<MatrixXd>(g.data() + b.off, rows, cols);
}
Map<VectorXd> gvec(std::span<double> g, Block b) {
    return Map<VectorXd>(g.data() + b.off, b.n);
}

}  // namespace

void FieldConfig::validate() const {
    grid.validate();
    if (point_embed_bands < 0 || dir_embed_bands < 0)
        throw ValidationError("field: embedding band counts must be >= 0");
    if (hidden_dim < 1) throw ValidationError("field.hidden_dim must be >= 1");
    if (geo_feature_dim < 1) throw ValidationError("field.geo_feature_dim must be >= 1");
}

ParamLayout ParamLayout::make(const FieldConfig& cfg) {
    ParamLayout lay;
    std::int64_t off = 0;
    auto put = [&off](Block& b, std::int64_t n) {
        b.off = off;
        b.n = n;
        off += n;
    };
    const int h = cfg.hidden_dim;
    const int in = cfg.sdf_input_dim();
    const int out = cfg.sdf_output_dim();
    const int cin = cfg.color_input_dim();
    put(lay.tables, cfg.grid.parameter_count());
    put(lay.w1, std::int64_t(h) * in);
    put(lay.b1, h);
    put(lay.w2, std::int64_t(h) * h);
    put(lay.b2, h);
    put(lay.w3, std::int64_t(out) * h);
    put(lay.b3, out);
    put(lay.skip, in);
    put(lay.v1, std::int64_t(h) * cin);
    put(lay.c1, h);
    put(lay.v2, std::int64_t(h) * h);
    put(lay.c2, h);
    put(lay.v3, std::int64_t(3) * h);
    put(lay.c3, 3);
    put(lay.sigma, 1);
    lay.total = off;
    return lay;
}

ParameterStore::ParameterStore(FieldConfig cfg) : cfg_(cfg), lay_(ParamLayout::make(cfg)) {
    cfg_.validate();
    values_.assign(lay_.total, 0.0);
}

void ParameterStore::initialize(std::uint64_t seed, double plane_z) {
    std::fill(values_.begin(), values_.end(), 0.0);
    RngStream rng(derive_seed(seed, 0x11D0));

    auto uniform_block = [&](Block b, double lim) {
        for (std::int64_t i = 0; i < b.n; ++i) values_[b.off + i] = rng.uniform(-lim, lim);
    };
    auto xavier = [&](Block b, int fan_in, int fan_out) {
        uniform_block(b, std::sqrt(6.0 / (fan_in + fan_out)));
    };

    const int h = cfg_.hidden_dim;
    const int in = cfg_.sdf_input_dim();
    const int out = cfg_.sdf_output_dim();
    const int cin = cfg_.color_input_dim();

    uniform_block(lay_.tables, 1e-4);
    xavier(lay_.w1, in, h);
    xavier(lay_.w2, h, h);
    xavier(lay_.w3, h, out);
    // keep the SDF row of the output layer small so the initial field is
    // dominated by the planar bias below
    {
        Map<MatrixXd> W3(values_.data() + lay_.w3.off, out, h);
        W3.row(0) *= 1e-2;
    }
    values_[lay_.b3.off] = -plane_z;
    // linear bypass picks out the raw z coordinate of the embedding block,
    // giving f(x) ~ z - plane_z at init
    values_[lay_.skip.off + cfg_.grid.output_dim() + 2] = 1.0;

    xavier(lay_.v1, cin, h);
    xavier(lay_.v2, h, h);
    // v3/c3 stay zero: initial color is exactly mid-gray
    values_[lay_.sigma.off] = std::log(1.0 / 0.3);
}

FieldEvaluator::FieldEvaluator(const ParameterStore& params, double lambda)
    : params_(&params), lambda_(lambda), geom_(GridGeometry::make(params.config().grid)) {
    const auto& grid = params.config().grid;
    const int active = active_levels(lambda, grid.levels);
    const int level = active > 0 ? active - 1 : 0;
    eps_ = 1.0 / geom_.resolution[level];
}

void FieldEvaluator::embed_point(const Vec3& x, std::span<double> out) const {
    FrequencyEmbedding emb{params_->config().point_embed_bands, true};
    emb.embed(std::span<const double>(x.data(), 3), out);
}

void FieldEvaluator::embed_dir(const Vec3& d, std::span<double> out) const {
    FrequencyEmbedding emb{params_->config().dir_embed_bands, true};
    emb.embed(std::span<const double>(d.data(), 3), out);
}

void FieldEvaluator::eval_sdf(const Matrix3Xd& X, int n_feat_cols, SdfTrace& out) const {
    const FieldConfig& cfg = params_->config();
    const auto& lay = params_->layout();
    const auto& v = params_->values();
    const int n = static_cast<int>(X.cols());
    const int h = cfg.hidden_dim;
    const int in = cfg.sdf_input_dim();
    const int enc = cfg.grid.output_dim();
    const int geo = cfg.geo_feature_dim;

    out.lambda = lambda_;
    out.X = X;
    out.H0.resize(in, n);
    const auto tables = params_->tables();
    for (int c = 0; c < n; ++c) {
        encode(cfg.grid, geom_, tables, X.col(c), lambda_,
               {out.H0.data() + std::int64_t(c) * in, static_cast<std::size_t>(enc)});
        embed_point(X.col(c), {out.H0.data() + std::int64_t(c) * in + enc,
                               static_cast<std::size_t>(in - enc)});
    }

    const auto W1 = cmap(v, lay.w1, h, in);
    const auto W2 = cmap(v, lay.w2, h, h);
    const auto W3 = cmap(v, lay.w3, 1 + geo, h);
    const auto b1 = cvec(v, lay.b1);
    const auto b2 = cvec(v, lay.b2);
    const auto b3 = cvec(v, lay.b3);
    const auto skip = cvec(v, lay.skip);

    out.A1.noalias() = W1 * out.H0;
    out.A1.colwise() += b1;
    softplus_inplace(out.A1);
    out.A2.noalias() = W2 * out.A1;
    out.A2.colwise() += b2;
    softplus_inplace(out.A2);

    out.f.noalias() = (W3.row(0) * out.A2).transpose();
    out.f.array() += b3(0);
    out.f.noalias() += out.H0.transpose() * skip;

    if (n_feat_cols > 0) {
        out.feat.noalias() = W3.bottomRows(geo) * out.A2.leftCols(n_feat_cols);
        out.feat.colwise() += b3.tail(geo);
    } else {
        out.feat.resize(geo, 0);
    }
}

void FieldEvaluator::sdf_values(const Matrix3Xd& X, VectorXd& f) const {
    SdfTrace tr;
    eval_sdf(X, 0, tr);
    f = std::move(tr.f);
}

double FieldEvaluator::sdf_value(const Vec3& x) const {
    Matrix3Xd X(3, 1);
    X.col(0) = x;
    VectorXd f;
    sdf_values(X, f);
    return f(0);
}

void FieldEvaluator::backward_sdf(const SdfTrace& tr, const VectorXd& df, const MatrixXd& dfeat,
                                  std::span<double> grad, Matrix3Xd* dX) const {
    const FieldConfig& cfg = params_->config();
    const auto& lay = params_->layout();
    const auto& v = params_->values();
    const int n = static_cast<int>(tr.X.cols());
    const int nf = static_cast<int>(dfeat.cols());
    const int h = cfg.hidden_dim;
    const int in = cfg.sdf_input_dim();
    const int enc = cfg.grid.output_dim();
    const int geo = cfg.geo_feature_dim;

    const auto W1 = cmap(v, lay.w1, h, in);
    const auto W2 = cmap(v, lay.w2, h, h);
    const auto W3 = cmap(v, lay.w3, 1 + geo, h);
    const auto skip = cvec(v, lay.skip);

    MatrixXd dA2 = W3.row(0).transpose() * df.transpose();
    if (nf > 0) dA2.leftCols(nf).noalias() += W3.bottomRows(geo).transpose() * dfeat;

    const MatrixXd D2 = dA2.cwiseProduct(softplus_grad_from_act(tr.A2));
    MatrixXd dA1 = W2.transpose() * D2;
    const MatrixXd D1 = dA1.cwiseProduct(softplus_grad_from_act(tr.A1));

    {
        auto gW1 = gmap(grad, lay.w1, h, in);
        auto gW2 = gmap(grad, lay.w2, h, h);
        auto gW3 = gmap(grad, lay.w3, 1 + geo, h);
        auto gb1 = gvec(grad, lay.b1);
        auto gb2 = gvec(grad, lay.b2);
        auto gb3 = gvec(grad, lay.b3);
        auto gskip = gvec(grad, lay.skip);
        gW2.noalias() += D2 * tr.A1.transpose();
        gb2.noalias() += D2.rowwise().sum();
        gW1.noalias() += D1 * tr.H0.transpose();
        gb1.noalias() += D1.rowwise().sum();
        gW3.row(0).noalias() += (tr.A2 * df).transpose();
        gb3(0) += df.sum();
        if (nf > 0) {
            gW3.bottomRows(geo).noalias() += dfeat * tr.A2.leftCols(nf).transpose();
            gb3.tail(geo).noalias() += dfeat.rowwise().sum();
        }
        gskip.noalias() += tr.H0 * df;
    }

    MatrixXd dH0 = W1.transpose() * D1;
    dH0.noalias() += skip * df.transpose();

    FrequencyEmbedding emb{cfg.point_embed_bands, true};
    std::span<double> gtables{grad.data() + lay.tables.off,
                              static_cast<std::size_t>(lay.tables.n)};
    const auto tables = params_->tables();
    for (int c = 0; c < n; ++c) {
        const double* dcol = dH0.data() + std::int64_t(c) * in;
        Vec3 dx = Vec3::Zero();
        encode_backward(cfg.grid, geom_, tables, tr.X.col(c), lambda_,
                        {dcol, static_cast<std::size_t>(enc)}, gtables,
                        dX ? &dx : nullptr);
        if (dX) {
            const Vec3 xc = tr.X.col(c);
            // the embedding sees the clamped position; outside the cube its
            // derivative w.r.t. the raw coordinate is zero
            Vec3 demb = Vec3::Zero();
            emb.backward(std::span<const double>(xc.data(), 3),
                         {dcol + enc, static_cast<std::size_t>(in - enc)},
                         std::span<double>(demb.data(), 3));
            for (int k = 0; k < 3; ++k)
                if (std::fabs(xc[k]) <= 1.0) dx[k] += demb[k];
            dX->col(c) += dx;
        }
    }
}

void FieldEvaluator::eval_color(const MatrixXd& Cin, ColorTrace& out) const {
    const FieldConfig& cfg = params_->config();
    const auto& lay = params_->layout();
    const auto& v = params_->values();
    const int h = cfg.hidden_dim;
    const int cin = cfg.color_input_dim();

    const auto V1 = cmap(v, lay.v1, h, cin);
    const auto V2 = cmap(v, lay.v2, h, h);
    const auto V3 = cmap(v, lay.v3, 3, h);
    const auto c1 = cvec(v, lay.c1);
    const auto c2 = cvec(v, lay.c2);
    const auto c3 = cvec(v, lay.c3);

    out.Cin = Cin;
    out.B1.noalias() = V1 * Cin;
    out.B1.colwise() += c1;
    out.B1 = out.B1.cwiseMax(0.0);
    out.B2.noalias() = V2 * out.B1;
    out.B2.colwise() += c2;
    out.B2 = out.B2.cwiseMax(0.0);
    MatrixXd z3 = V3 * out.B2;
    z3.colwise() += c3;
    out.rgb = (1.0 / (1.0 + (-z3.array()).exp())).matrix();
}

void FieldEvaluator::backward_color(const ColorTrace& tr, const Matrix3Xd& drgb,
                                    std::span<double> grad, MatrixXd* dCin) const {
    const FieldConfig& cfg = params_->config();
    const auto& lay = params_->layout();
    const auto& v = params_->values();
    const int h = cfg.hidden_dim;
    const int cin = cfg.color_input_dim();

    const auto V1 = cmap(v, lay.v1, h, cin);
    const auto V2 = cmap(v, lay.v2, h, h);
    const auto V3 = cmap(v, lay.v3, 3, h);

    const MatrixXd dZ3 =
        drgb.cwiseProduct(tr.rgb.cwiseProduct((1.0 - tr.rgb.array()).matrix()));
    MatrixXd dB2 = V3.transpose() * dZ3;
    const MatrixXd D2 = dB2.cwiseProduct((tr.B2.array() > 0.0).cast<double>().matrix());
    MatrixXd dB1 = V2.transpose() * D2;
    const MatrixXd D1 = dB1.cwiseProduct((tr.B1.array() > 0.0).cast<double>().matrix());

    auto gV1 = gmap(grad, lay.v1, h, cin);
    auto gV2 = gmap(grad, lay.v2, h, h);
    auto gV3 = gmap(grad, lay.v3, 3, h);
    auto gc1 = gvec(grad, lay.c1);
    auto gc2 = gvec(grad, lay.c2);
    auto gc3 = gvec(grad, lay.c3);
    gV3.noalias() += dZ3 * tr.B2.transpose();
    gc3.noalias() += dZ3.rowwise().sum();
    gV2.noalias() += D2 * tr.B1.transpose();
    gc2.noalias() += D2.rowwise().sum();
    gV1.noalias() += D1 * tr.Cin.transpose();
    gc1.noalias() += D1.rowwise().sum();

    if (dCin) dCin->noalias() = V1.transpose() * D1;
}

namespace {

Matrix3Xd stencil_positions(const Vec3& x, double eps) {
    Matrix3Xd X(3, 6);
    for (int k = 0; k < 3; ++k) {
        X.col(2 * k) = x;
        X.col(2 * k)[k] += eps;
        X.col(2 * k + 1) = x;
        X.col(2 * k + 1)[k] -= eps;
    }
    return X;
}

Vec3 gradient_from_stencil(const VectorXd& f, double eps) {
    return {(f(0) - f(1)) / (2 * eps), (f(2) - f(3)) / (2 * eps), (f(4) - f(5)) / (2 * eps)};
}

}  // namespace

Vec3 spatial_gradient(const ParameterStore& params, const Vec3& x, double lambda, double eps) {
    FieldEvaluator ev(params, lambda);
    if (eps <= 0.0) eps = ev.gradient_step();
    VectorXd f;
    ev.sdf_values(stencil_positions(x, eps), f);
    return gradient_from_stencil(f, eps);
}

FieldSample eval_field(const ParameterStore& params, const Vec3& x, const Vec3& view_dir,
                       const Vec3& sun_dir, double lambda) {
    const FieldConfig& cfg = params.config();
    FieldEvaluator ev(params, lambda);

    Matrix3Xd X(3, 1);
    X.col(0) = x;
    SdfTrace tr;
    ev.eval_sdf(X, 1, tr);

    FieldSample s;
    s.sdf = tr.f(0);
    s.feature = tr.feat.col(0);
    s.gradient = spatial_gradient(params, x, lambda);

    const int dd = cfg.dir_embed_dim();
    MatrixXd cin(cfg.color_input_dim(), 1);
    cin.block(cfg.col_x(), 0, 3, 1) = x;
    cin.block(cfg.col_grad(), 0, 3, 1) = s.gradient;
    cin.block(cfg.col_feat(), 0, cfg.geo_feature_dim, 1) = s.feature;
    ev.embed_dir(view_dir, {cin.data() + cfg.col_view(), static_cast<std::size_t>(dd)});
    ev.embed_dir(sun_dir, {cin.data() + cfg.col_sun(), static_cast<std::size_t>(dd)});

    ColorTrace ct;
    ev.eval_color(cin, ct);
    s.color = ct.rgb.col(0);

    if (!std::isfinite(s.sdf) || !s.gradient.allFinite() || !s.color.allFinite() ||
        !s.feature.allFinite())
        throw NonFiniteError("eval_field: non-finite activation");
    return s;
}

// ---- checkpoint I/O ----

namespace {

constexpr char kMagic[4] = {'S', 'A', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

void write_f32(std::ofstream& out, std::span<const double> v) {
    std::vector<float> buf(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) buf[i] = static_cast<float>(v[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<double> read_f32(std::ifstream& in, std::size_t n) {
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = buf[i];
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const ParameterStore& params,
                     std::span<const double> m, std::span<const double> v,
                     std::int64_t iteration) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot write " + file.string());
    const FieldConfig& cfg = params.config();
    out.write(kMagic, 4);
    auto w32 = [&](std::int32_t x) { out.write(reinterpret_cast<const char*>(&x), 4); };
    auto w64 = [&](std::uint64_t x) { out.write(reinterpret_cast<const char*>(&x), 8); };
    w32(static_cast<std::int32_t>(kVersion));
    w32(cfg.grid.levels);
    w32(cfg.grid.base_resolution);
    w32(cfg.grid.max_resolution);
    w32(cfg.grid.table_log2);
    w32(cfg.grid.feature_dim);
    w32(cfg.point_embed_bands);
    w32(cfg.dir_embed_bands);
    w32(cfg.hidden_dim);
    w32(cfg.geo_feature_dim);
    w64(static_cast<std::uint64_t>(params.size()));
    write_f32(out, params.values());
    write_f32(out, m);
    write_f32(out, v);
    w64(static_cast<std::uint64_t>(iteration));
    if (!out) throw IoError("checkpoint: write failed for " + file.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + file.string());
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("checkpoint: bad magic in " + file.string());
    auto r32 = [&] {
        std::int32_t x;
        in.read(reinterpret_cast<char*>(&x), 4);
        return x;
    };
    auto r64 = [&] {
        std::uint64_t x;
        in.read(reinterpret_cast<char*>(&x), 8);
        return x;
    };
    const auto version = r32();
    if (version != static_cast<std::int32_t>(kVersion))
        throw IoError("checkpoint: unsupported version in " + file.string());
    LoadedCheckpoint ck;
    ck.config.grid.levels = r32();
    ck.config.grid.base_resolution = r32();
    ck.config.grid.max_resolution = r32();
    ck.config.grid.table_log2 = r32();
    ck.config.grid.feature_dim = r32();
    ck.config.point_embed_bands = r32();
    ck.config.dir_embed_bands = r32();
    ck.config.hidden_dim = r32();
    ck.config.geo_feature_dim = r32();
    const auto count = static_cast<std::size_t>(r64());
    const auto expect = static_cast<std::size_t>(ParamLayout::make(ck.config).total);
    if (count != expect) throw IoError("checkpoint: parameter count mismatch in " + file.string());
    ck.params = read_f32(in, count);
    ck.m = read_f32(in, count);
    ck.v = read_f32(in, count);
    ck.iteration = static_cast<std::int64_t>(r64());
    if (!in) throw IoError("checkpoint: truncated file " + file.string());
    return ck;
}

}  // namespace satsurf
