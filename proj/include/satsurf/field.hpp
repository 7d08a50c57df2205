#pragma once

#include <filesystem>
#include <span>

#include "satsurf/common.hpp"
#include "satsurf/encoding.hpp"

namespace satsurf {

struct FieldConfig {
    HashGridConfig grid;
    int point_embed_bands = 6;
    int dir_embed_bands = 4;
    int hidden_dim = 64;
    int geo_feature_dim = 256;

    void validate() const;

    int point_embed_dim() const { return 3 * (2 * point_embed_bands + 1); }
    int dir_embed_dim() const { return 3 * (2 * dir_embed_bands + 1); }
    int sdf_input_dim() const { return grid.output_dim() + point_embed_dim(); }
    int sdf_output_dim() const { return 1 + geo_feature_dim; }
    int color_input_dim() const { return 3 + 3 + geo_feature_dim + 2 * dir_embed_dim(); }

    // color input column layout
    int col_x() const { return 0; }
    int col_grad() const { return 3; }
    int col_feat() const { return 6; }
    int col_view() const { return 6 + geo_feature_dim; }
    int col_sun() const { return 6 + geo_feature_dim + dir_embed_dim(); }
};

struct Block {
    std::int64_t off = 0, n = 0;
};

// Flat parameter vector layout. Matrices are stored column-major. The same
// layout is used for gradients, optimizer moments and the checkpoint file.
struct ParamLayout {
    Block tables;               // levels * table_size * feature_dim
    Block w1, b1, w2, b2;       // SDF MLP hidden layers (softplus)
    Block w3, b3;               // SDF MLP output layer: rows = 1 sdf + geo feature
    Block skip;                 // linear input->sdf bypass (geometric bias)
    Block v1, c1, v2, c2;       // color MLP hidden layers (relu)
    Block v3, c3;               // color MLP output layer (logistic)
    Block sigma;                // bandwidth: s = exp(sigma)
    std::int64_t total = 0;

    static ParamLayout make(const FieldConfig& cfg);
};

class ParameterStore {
public:
    explicit ParameterStore(FieldConfig cfg);

    const FieldConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return lay_; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::int64_t size() const { return lay_.total; }

    double s() const { return std::exp(values_[lay_.sigma.off]); }
    double sigma() const { return values_[lay_.sigma.off]; }

    std::span<const double> tables() const {
        return {values_.data() + lay_.tables.off, static_cast<std::size_t>(lay_.tables.n)};
    }

    // Random init with the SDF biased toward the horizontal plane z = plane_z
    // (canonical), positive above. The color MLP output layer starts at zero.
    void initialize(std::uint64_t seed, double plane_z = 0.0);

private:
    FieldConfig cfg_;
    ParamLayout lay_;
    std::vector<double> values_;
};

// ---- batched evaluation with recorded activations ----

// One batched pass of the SDF trunk; columns are positions.
struct SdfTrace {
    Matrix3Xd X;       // raw (unclamped) positions
    MatrixXd H0;       // inputs
    MatrixXd A1, A2;   // softplus activations
    VectorXd f;        // SDF values
    MatrixXd feat;     // geometric features for the first n_feat columns
    double lambda = 0;
};

struct ColorTrace {
    MatrixXd Cin;
    MatrixXd B1, B2;   // relu activations
    Matrix3Xd rgb;     // post-logistic colors
};

// Read-only view over a ParameterStore bound to a gate value. All methods are
// safe to call concurrently.
class FieldEvaluator {
public:
    FieldEvaluator(const ParameterStore& params, double lambda);

    double lambda() const { return lambda_; }
    double s() const { return params_->s(); }
    const ParameterStore& params() const { return *params_; }

    // central-difference step: half the finest active cell size
    double gradient_step() const { return eps_; }

    void eval_sdf(const Matrix3Xd& X, int n_feat_cols, SdfTrace& out) const;
    void sdf_values(const Matrix3Xd& X, VectorXd& f) const;  // forward only, no trace
    double sdf_value(const Vec3& x) const;

    // df: adjoint of f per column; dfeat: adjoint of feat (may have 0 columns).
    // Parameter gradients accumulate into `grad` (layout-sized). When dX is
    // non-null, positional gradients are added to it.
    void backward_sdf(const SdfTrace& tr, const VectorXd& df, const MatrixXd& dfeat,
                      std::span<double> grad, Matrix3Xd* dX) const;

    void eval_color(const MatrixXd& Cin, ColorTrace& out) const;
    // drgb: adjoint of rgb. dCin (optional) receives input adjoints.
    void backward_color(const ColorTrace& tr, const Matrix3Xd& drgb, std::span<double> grad,
                        MatrixXd* dCin) const;

    // embedding helpers used when assembling color inputs
    void embed_point(const Vec3& x, std::span<double> out) const;
    void embed_dir(const Vec3& d, std::span<double> out) const;

private:
    const ParameterStore* params_;
    double lambda_;
    GridGeometry geom_;
    double eps_;
};

// ---- single-point convenience API ----

struct FieldSample {
    double sdf = 0;
    VectorXd feature;
    Vec3 color = Vec3::Zero();
    Vec3 gradient = Vec3::Zero();
};

// encode -> SDF MLP -> finite-difference gradient -> color MLP.
// Throws NonFiniteError on NaN/Inf activations.
FieldSample eval_field(const ParameterStore& params, const Vec3& x, const Vec3& view_dir,
                       const Vec3& sun_dir, double lambda);

// Central differences per axis; eps <= 0 selects the default step.
Vec3 spatial_gradient(const ParameterStore& params, const Vec3& x, double lambda,
                      double eps = 0.0);

// ---- checkpoint I/O ----
//
// Binary little-endian layout:
//   bytes 0..3   magic "SATS"
//   u32          version (1)
//   i32 x 9      levels, base_resolution, max_resolution, table_log2,
//                feature_dim, point_embed_bands, dir_embed_bands,
//                hidden_dim, geo_feature_dim
//   u64          parameter count P
//   f32 x P      parameters   (ParamLayout order: hash tables, SDF MLP,
//                skip, color MLP, bandwidth)
//   f32 x P      Adam first moments
//   f32 x P      Adam second moments
//   u64          iteration counter

struct LoadedCheckpoint {
    FieldConfig config;
    std::int64_t iteration = 0;
    std::vector<double> params, m, v;
};

void save_checkpoint(const std::filesystem::path& file, const ParameterStore& params,
                     std::span<const double> m, std::span<const double> v,
                     std::int64_t iteration);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace satsurf
