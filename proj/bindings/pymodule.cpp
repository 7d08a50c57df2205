#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "satsurf/cli.hpp"
#include "satsurf/pipeline.hpp"

namespace py = pybind11;
using namespace satsurf;

namespace {

// Field wrapper: parameters plus the configured gate value.
struct PyField {
    ParameterStore params;
    explicit PyField(FieldConfig cfg) : params(std::move(cfg)) {}
};

Eigen::MatrixXd mesh_vertices(const TriangleMesh& m) {
    Eigen::MatrixXd v(m.vertices.size(), 3);
    for (std::size_t i = 0; i < m.vertices.size(); ++i) v.row(i) = m.vertices[i].transpose();
    return v;
}

Eigen::MatrixXi mesh_faces(const TriangleMesh& m) {
    Eigen::MatrixXi f(m.triangles.size(), 3);
    for (std::size_t i = 0; i < m.triangles.size(); ++i)
        for (int k = 0; k < 3; ++k) f(i, k) = m.triangles[i][k];
    return f;
}

std::vector<Vec3> to_points(const Eigen::MatrixXd& m) {
    if (m.cols() != 3) throw ValidationError("expected an (n, 3) point array");
    std::vector<Vec3> pts(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) pts[i] = m.row(i).transpose();
    return pts;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "multi-view satellite surface reconstruction core";

    py::register_exception<ValidationError>(m, "ValidationError");
    py::register_exception<RuntimeFailure>(m, "RuntimeFailure");

    // ---- camera model ----
    py::class_<RpcModel>(m, "RpcModel")
        .def(py::init<>())
        .def_static("identity", &RpcModel::identity)
        .def_static("load", &RpcModel::load, py::arg("path"))
        .def("save", &RpcModel::save, py::arg("path"))
        .def_readwrite("line_off", &RpcModel::line_off)
        .def_readwrite("samp_off", &RpcModel::samp_off)
        .def_readwrite("lat_off", &RpcModel::lat_off)
        .def_readwrite("lon_off", &RpcModel::lon_off)
        .def_readwrite("alt_off", &RpcModel::alt_off)
        .def_readwrite("line_scale", &RpcModel::line_scale)
        .def_readwrite("samp_scale", &RpcModel::samp_scale)
        .def_readwrite("lat_scale", &RpcModel::lat_scale)
        .def_readwrite("lon_scale", &RpcModel::lon_scale)
        .def_readwrite("alt_scale", &RpcModel::alt_scale);

    m.def(
        "project",
        [](const RpcModel& model, double lon, double lat, double alt) {
            const Vec2 px = rpc_project(model, lon, lat, alt);
            return std::make_pair(px[0], px[1]);
        },
        py::arg("model"), py::arg("lon"), py::arg("lat"), py::arg("alt"),
        "Forward RPC projection -> (u, v) = (line, samp)");
    m.def(
        "localize",
        [](const RpcModel& model, double u, double v, double alt) {
            const Vec2 ll = rpc_localize(model, u, v, alt);
            return std::make_pair(ll[0], ll[1]);
        },
        py::arg("model"), py::arg("u"), py::arg("v"), py::arg("alt"),
        "Inverse RPC at fixed altitude -> (lon, lat)");

    py::class_<SceneBounds>(m, "SceneBounds")
        .def(py::init([](double lat_min, double lat_max, double lon_min, double lon_max,
                         double alt_lower, double alt_upper, const std::string& zone) {
                 return SceneBounds(lat_min, lat_max, lon_min, lon_max, alt_lower, alt_upper,
                                    parse_utm_zone(zone));
             }),
             py::arg("lat_min"), py::arg("lat_max"), py::arg("lon_min"), py::arg("lon_max"),
             py::arg("alt_ref_lower"), py::arg("alt_ref_upper"), py::arg("utm_zone"))
        .def("canonical_from_geodetic",
             [](const SceneBounds& b, double lon, double lat, double alt) {
                 return Vec3(b.canonical_from_geodetic(lon, lat, alt));
             })
        .def("geodetic_from_canonical",
             [](const SceneBounds& b, const Vec3& c) { return Vec3(b.geodetic_from_canonical(c)); })
        .def("utm_from_canonical",
             [](const SceneBounds& b, const Vec3& c) { return Vec3(b.utm_from_canonical(c)); })
        .def("axis_scales_m", [](const SceneBounds& b) { return Vec3(b.axis_scales_m()); });

    py::class_<Ray>(m, "Ray")
        .def_readonly("origin", &Ray::origin)
        .def_readonly("dir", &Ray::dir)
        .def_readonly("t_near", &Ray::t_near)
        .def_readonly("t_far", &Ray::t_far);

    m.def(
        "make_ray",
        [](const RpcModel& model, double u, double v, const SceneBounds& bounds) {
            return make_ray(model, u, v, bounds);
        },
        py::arg("model"), py::arg("u"), py::arg("v"), py::arg("bounds"));

    // ---- encoding / field ----
    m.def(
        "embed_frequency",
        [](const Eigen::VectorXd& v, int bands, bool include_input) {
            FrequencyEmbedding emb{bands, include_input};
            Eigen::VectorXd out(emb.out_dim(static_cast<int>(v.size())));
            emb.embed({v.data(), static_cast<std::size_t>(v.size())},
                      {out.data(), static_cast<std::size_t>(out.size())});
            return out;
        },
        py::arg("v"), py::arg("bands"), py::arg("include_input") = true);

    m.def("schedule_lambda",
          [](std::int64_t iter, std::int64_t total, double lambda_init, double step_fraction,
             int levels) {
              TrainConfig cfg;
              cfg.total_iters = total;
              cfg.lambda_init = lambda_init;
              cfg.lambda_step_fraction = step_fraction;
              return schedule_lambda(iter, cfg, levels);
          },
          py::arg("iter"), py::arg("total_iters"), py::arg("lambda_init") = 4.0,
          py::arg("step_fraction") = 0.025, py::arg("levels") = 24);

    py::class_<FieldConfig>(m, "FieldConfig")
        .def(py::init([](int levels, int base_resolution, int max_resolution, int table_log2,
                         int feature_dim, int point_embed_bands, int dir_embed_bands,
                         int hidden_dim, int geo_feature_dim) {
                 FieldConfig cfg;
                 cfg.grid.levels = levels;
                 cfg.grid.base_resolution = base_resolution;
                 cfg.grid.max_resolution = max_resolution;
                 cfg.grid.table_log2 = table_log2;
                 cfg.grid.feature_dim = feature_dim;
                 cfg.point_embed_bands = point_embed_bands;
                 cfg.dir_embed_bands = dir_embed_bands;
                 cfg.hidden_dim = hidden_dim;
                 cfg.geo_feature_dim = geo_feature_dim;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("levels") = 24, py::arg("base_resolution") = 16,
             py::arg("max_resolution") = 2048, py::arg("table_log2") = 19,
             py::arg("feature_dim") = 2, py::arg("point_embed_bands") = 6,
             py::arg("dir_embed_bands") = 4, py::arg("hidden_dim") = 64,
             py::arg("geo_feature_dim") = 256)
        .def_property_readonly("parameter_count",
                               [](const FieldConfig& cfg) { return ParamLayout::make(cfg).total; });

    py::class_<PyField>(m, "Field")
        .def(py::init<FieldConfig>(), py::arg("config"))
        .def("initialize",
             [](PyField& f, std::uint64_t seed, double plane_z) {
                 f.params.initialize(seed, plane_z);
             },
             py::arg("seed"), py::arg("plane_z") = 0.0)
        .def_static("from_checkpoint",
                    [](const std::filesystem::path& path) {
                        const LoadedCheckpoint ck = load_checkpoint(path);
                        auto f = std::make_unique<PyField>(ck.config);
                        f->params.values() = ck.params;
                        return f;
                    })
        .def("encode",
             [](const PyField& f, const Vec3& x, double lambda) {
                 Eigen::VectorXd out(f.params.config().grid.output_dim());
                 encode(f.params.config().grid, f.params.tables(), x, lambda,
                        {out.data(), static_cast<std::size_t>(out.size())});
                 return out;
             },
             py::arg("x"), py::arg("lambda_level"))
        .def("sdf",
             [](const PyField& f, const Eigen::MatrixXd& pts, double lambda) {
                 const auto X = to_points(pts);
                 Matrix3Xd P(3, X.size());
                 for (std::size_t i = 0; i < X.size(); ++i) P.col(i) = X[i];
                 const FieldEvaluator ev(f.params, lambda);
                 VectorXd out;
                 ev.sdf_values(P, out);
                 return Eigen::VectorXd(out);
             },
             py::arg("points"), py::arg("lambda_level"))
        .def("gradient",
             [](const PyField& f, const Vec3& x, double lambda) {
                 return Vec3(spatial_gradient(f.params, x, lambda));
             },
             py::arg("x"), py::arg("lambda_level"))
        .def("sample",
             [](const PyField& f, const Vec3& x, const Vec3& view, const Vec3& sun,
                double lambda) {
                 const FieldSample s = eval_field(f.params, x, view.normalized(),
                                                  sun.normalized(), lambda);
                 py::dict d;
                 d["sdf"] = s.sdf;
                 d["color"] = Vec3(s.color);
                 d["gradient"] = Vec3(s.gradient);
                 return d;
             },
             py::arg("x"), py::arg("view_dir"), py::arg("sun_dir"), py::arg("lambda_level"))
        .def("s", [](const PyField& f) { return f.params.s(); });

    // ---- rendering ----
    m.def("alpha_from_sdf", &alpha_from_sdf, py::arg("f_i"), py::arg("f_next"), py::arg("s"));
    m.def(
        "composite",
        [](const Eigen::VectorXd& alphas, const Eigen::MatrixXd& colors,
           const Eigen::VectorXd& ts) {
            if (colors.rows() != 3 && colors.cols() == 3) {
                const Matrix3Xd c = colors.transpose();
                const CompositeResult r = composite(alphas, c, ts);
                py::dict d;
                d["color"] = Vec3(r.color);
                d["depth"] = r.depth;
                d["weights"] = Eigen::VectorXd(r.weights);
                d["weight_sum"] = r.weight_sum;
                return d;
            }
            const CompositeResult r = composite(alphas, Matrix3Xd(colors), ts);
            py::dict d;
            d["color"] = Vec3(r.color);
            d["depth"] = r.depth;
            d["weights"] = Eigen::VectorXd(r.weights);
            d["weight_sum"] = r.weight_sum;
            return d;
        },
        py::arg("alphas"), py::arg("colors"), py::arg("ts"),
        "Front-to-back compositing; colors may be (3, n) or (n, 3)");

    // ---- losses ----
    m.def("color_loss", [](const Eigen::MatrixXd& r, const Eigen::MatrixXd& t) {
        return color_loss(Matrix3Xd(r.transpose()), Matrix3Xd(t.transpose()));
    });
    m.def("eikonal_loss", [](const Eigen::MatrixXd& grads) {
        const auto pts = to_points(grads);
        return eikonal_loss(pts);
    });
    m.def("depth_loss", [](const Eigen::VectorXd& rendered, const Eigen::VectorXd& target,
                           const Eigen::VectorXd& mask) {
        std::vector<std::uint8_t> m8(mask.size());
        for (Eigen::Index i = 0; i < mask.size(); ++i) m8[i] = mask[i] != 0.0;
        return depth_loss({rendered.data(), static_cast<std::size_t>(rendered.size())},
                          {target.data(), static_cast<std::size_t>(target.size())}, m8);
    });
    m.def("delta_pred", [](const Vec3& center, const Eigen::MatrixXd& neighbors) {
        const auto pts = to_points(neighbors);
        return delta_pred(center, pts);
    });
    m.def("normal_loss", [](const Eigen::VectorXd& pred, const Eigen::VectorXd& gt) {
        return normal_loss({pred.data(), static_cast<std::size_t>(pred.size())},
                           {gt.data(), static_cast<std::size_t>(gt.size())});
    });

    // ---- priors ----
    py::enum_<FitForm>(m, "FitForm")
        .value("CONVENTIONAL", FitForm::Conventional)
        .value("LITERAL", FitForm::Literal);
    m.def(
        "fit_scale_offset",
        [](const Eigen::VectorXd& sparse_depth, const Eigen::VectorXd& relative,
           const Eigen::VectorXd& weight, FitForm form) {
            const FitResult fit = fit_scale_offset(
                {sparse_depth.data(), static_cast<std::size_t>(sparse_depth.size())},
                {relative.data(), static_cast<std::size_t>(relative.size())},
                {weight.data(), static_cast<std::size_t>(weight.size())}, form);
            py::dict d;
            d["scale"] = fit.scale;
            d["offset"] = fit.offset;
            d["residual_mean"] = fit.residual_mean;
            d["residual_median"] = fit.residual_median;
            return d;
        },
        py::arg("sparse_depth"), py::arg("relative"), py::arg("weight"),
        py::arg("form") = FitForm::Conventional);
    m.def(
        "normals_from_depth",
        [](const Eigen::MatrixXd& depth, double pixel_pitch) {
            FloatImage img(static_cast<int>(depth.cols()), static_cast<int>(depth.rows()));
            for (int u = 0; u < img.height; ++u)
                for (int v = 0; v < img.width; ++v)
                    img.at(u, v) = static_cast<float>(depth(u, v));
            const NormalMap nm = normals_from_depth(img, pixel_pitch);
            Eigen::MatrixXd delta(img.height, img.width);
            Eigen::MatrixXd normals(std::int64_t(img.height) * img.width, 3);
            for (int u = 0; u < img.height; ++u)
                for (int v = 0; v < img.width; ++v) {
                    delta(u, v) = nm.delta[std::size_t(u) * img.width + v];
                    normals.row(std::int64_t(u) * img.width + v) = nm.normal(u, v).transpose();
                }
            return std::make_pair(normals, delta);
        },
        py::arg("relative_depth"), py::arg("pixel_pitch") = 1.0,
        "Returns (normals (H*W, 3), consistency targets (H, W))");

    // ---- extraction / evaluation ----
    m.def(
        "marching_cubes",
        [](const Eigen::VectorXd& values, int resolution, double iso) {
            const std::vector<double> v(values.data(), values.data() + values.size());
            const TriangleMesh mesh = marching_cubes_grid(v, resolution, iso);
            return std::make_pair(mesh_vertices(mesh), mesh_faces(mesh));
        },
        py::arg("grid_values"), py::arg("resolution"), py::arg("iso") = 0.0,
        "grid_values: (res+1)^3 SDF samples, x fastest; returns (vertices, faces)");
    m.def(
        "rasterize_dsm",
        [](const Eigen::MatrixXd& vertices, const Eigen::MatrixXi& faces, double x0, double y0,
           double cell, int width, int height, bool fill_nodata) {
            TriangleMesh mesh;
            mesh.frame = TriangleMesh::Frame::Utm;
            mesh.vertices.resize(vertices.rows());
            for (Eigen::Index i = 0; i < vertices.rows(); ++i)
                mesh.vertices[i] = vertices.row(i).transpose();
            mesh.triangles.resize(faces.rows());
            for (Eigen::Index i = 0; i < faces.rows(); ++i)
                mesh.triangles[i] = {faces(i, 0), faces(i, 1), faces(i, 2)};
            const Dsm dsm = rasterize_dsm(mesh, DsmSpec{x0, y0, cell, width, height}, fill_nodata);
            return Eigen::MatrixXd(dsm.heights);
        },
        py::arg("vertices"), py::arg("faces"), py::arg("x0"), py::arg("y0"), py::arg("cell"),
        py::arg("width"), py::arg("height"), py::arg("fill_nodata") = false,
        "Heights matrix with -9999 as NoData, row 0 = north edge");
    m.def("chamfer", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        const auto pa = to_points(a);
        const auto pb = to_points(b);
        return chamfer(pa, pb);
    });
    m.def(
        "dsm_error_stats",
        [](const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double cell,
           bool align_median) {
            DsmSpec spec{0, 0, cell, static_cast<int>(pred.cols()), static_cast<int>(pred.rows())};
            Dsm p(spec), t(spec);
            p.heights = pred;
            t.heights = truth;
            const DsmDiffReport rep = dsm_error_stats(p, t, align_median);
            py::dict d;
            d["mae"] = rep.mae;
            d["med"] = rep.med;
            d["valid_cells"] = rep.valid_cells;
            return d;
        },
        py::arg("pred"), py::arg("truth"), py::arg("cell") = 0.5, py::arg("align_median") = false);

    // ---- pipeline ----
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) { return run_command(args); },
        py::arg("args"), "Invoke the command-line pipeline; returns the exit status");
}
