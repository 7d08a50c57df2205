#include "satsurf/pipeline.hpp"

#include <fstream>
#include <iostream>

namespace satsurf {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace

SynthResult run_synth(const PipelineConfig& cfg) {
    require(!cfg.scene.empty(), "synth: [paths] scene is required");
    require(std::filesystem::exists(cfg.scene), "synth: scene file not found: " + cfg.scene.string());
    require(!cfg.output_dir.empty(), "synth: [paths] output_dir is required");
    const SynthScene scene = load_scene(cfg.scene);
    return generate_dataset(scene, cfg.output_dir / "dataset", cfg.train.seed);
}

FuseSummary run_fuse_depth(const PipelineConfig& cfg) {
    require(!cfg.manifest.empty(), "fuse-depth: [paths] manifest is required");
    require(std::filesystem::exists(cfg.manifest),
            "fuse-depth: manifest not found: " + cfg.manifest.string());
    const Manifest manifest = Manifest::load(cfg.manifest);
    const SceneBounds bounds = manifest.bounds();
    const auto fused_dir = cfg.fused_directory();
    std::filesystem::create_directories(fused_dir);

    FuseSummary summary;
    for (const auto& entry : manifest.images) {
        if (entry.depth.empty() || entry.sparse.empty()) continue;
        require(std::filesystem::exists(entry.depth),
                "fuse-depth: missing depth map " + entry.depth.string());
        require(std::filesystem::exists(entry.sparse),
                "fuse-depth: missing sparse csv " + entry.sparse.string());
        const FloatImage rel = read_pfm(entry.depth);
        const auto obs = read_sparse_csv(entry.sparse);
        const RpcModel rpc = RpcModel::load(entry.rpc);

        std::vector<std::uint8_t> mask;
        if (!entry.mask.empty() && std::filesystem::exists(entry.mask)) {
            const ImageU8 m = read_png(entry.mask);
            mask.resize(std::size_t(m.width) * m.height);
            for (std::size_t i = 0; i < mask.size(); ++i)
                mask[i] = m.data[i * m.channels] >= 128 ? 1 : 0;
        }

        const FusedDepthMap fused = fuse_depth(rel, mask, obs, rpc, bounds, cfg.fit_form);
        const std::string stem = entry.image.stem().string();
        write_pfm(fused_dir / (stem + ".pfm"), fused.absolute);
        std::ofstream side(fused_dir / (stem + ".txt"));
        side.precision(17);
        side << "scale " << fused.fit.scale << "\n"
             << "offset " << fused.fit.offset << "\n"
             << "residual_mean " << fused.fit.residual_mean << "\n"
             << "residual_median " << fused.fit.residual_median << "\n"
             << "points " << fused.fit.n_points << "\n"
             << "dropped " << fused.dropped_observations << "\n";
        ++summary.images_fused;
        summary.residual_mean = std::max(summary.residual_mean, fused.fit.residual_mean);
        summary.residual_median = std::max(summary.residual_median, fused.fit.residual_median);
    }
    require(summary.images_fused > 0, "fuse-depth: no image has both depth and sparse inputs");
    return summary;
}

TrainSummary run_train(const PipelineConfig& cfg, const std::filesystem::path& resume_checkpoint,
                       const std::filesystem::path& dump_rays) {
    require(!cfg.manifest.empty(), "train: [paths] manifest is required");
    require(std::filesystem::exists(cfg.manifest),
            "train: manifest not found: " + cfg.manifest.string());
    require(!cfg.output_dir.empty(), "train: [paths] output_dir is required");
    const Manifest manifest = Manifest::load(cfg.manifest);
    const Dataset dataset = load_dataset(manifest, cfg.fused_directory());

    TrainState state =
        resume_checkpoint.empty()
            ? make_train_state(cfg.field, cfg.train, dataset)
            : train_state_from_checkpoint(load_checkpoint(resume_checkpoint));

    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream log(cfg.output_dir / "loss_log.csv",
                      state.iter > 0 ? std::ios::app : std::ios::trunc);
    if (state.iter == 0) log << "iter,color,depth,normal,eikonal,total,lambda_level,s\n";
    log.precision(10);

    TrainHooks hooks;
    hooks.on_step = [&](std::int64_t iter, const BatchLosses& losses, double lambda, double s) {
        log << iter << "," << losses.color << "," << losses.depth << "," << losses.normal << ","
            << losses.eikonal << "," << losses.total << "," << lambda << "," << s << "\n";
        if (iter % 500 == 0) {
            std::cerr << "iter " << iter << "  total " << losses.total << "  color "
                      << losses.color << "  depth " << losses.depth << "  lambda " << lambda
                      << "\n";
            log.flush();
        }
    };
    if (!dump_rays.empty()) {
        hooks.on_first_forward = [&](const BatchForward& fwd) {
            std::ofstream dump(dump_rays);
            dump << "ray,t,sdf,alpha,weight\n";
            dump.precision(10);
            for (std::size_t r = 0; r < fwd.tapes.size(); ++r) {
                const RayTape& tape = fwd.tapes[r];
                for (int i = 0; i + 1 < tape.ts.size(); ++i)
                    dump << r << "," << tape.ts(i) << "," << tape.main.f(i) << ","
                         << tape.alphas(i) << "," << tape.render.weights(i) << "\n";
            }
        };
    }

    TrainSummary summary;
    BatchLosses last;
    auto forward_hook = hooks.on_step;
    hooks.on_step = [&](std::int64_t iter, const BatchLosses& losses, double lambda, double s) {
        last = losses;
        forward_hook(iter, losses, lambda, s);
    };
    train_loop(state, dataset, cfg.train, cfg.output_dir / "checkpoints", hooks);
    summary.final_checkpoint = cfg.output_dir / "checkpoints" / "ckpt_final.bin";
    summary.last_losses = last;
    return summary;
}

ExtractSummary run_extract(const PipelineConfig& cfg, const std::filesystem::path& checkpoint,
                           bool fill_nodata) {
    require(!cfg.manifest.empty(), "extract: [paths] manifest is required");
    require(std::filesystem::exists(cfg.manifest),
            "extract: manifest not found: " + cfg.manifest.string());
    require(std::filesystem::exists(checkpoint),
            "extract: checkpoint not found: " + checkpoint.string());
    require(!cfg.output_dir.empty(), "extract: [paths] output_dir is required");
    std::filesystem::create_directories(cfg.output_dir);

    const Manifest manifest = Manifest::load(cfg.manifest);
    const SceneBounds bounds = manifest.bounds();
    const LoadedCheckpoint ck = load_checkpoint(checkpoint);
    ParameterStore params(ck.config);
    params.values() = ck.params;

    // all grid levels active regardless of the checkpoint's training stage
    const double lambda = ck.config.grid.levels;
    const FieldEvaluator ev(params, lambda);
    const SdfBatchFn sdf = [&ev](const Matrix3Xd& X, VectorXd& f) { ev.sdf_values(X, f); };

    TriangleMesh mesh = marching_cubes(sdf, cfg.extract_resolution, cfg.iso);
    mesh_to_utm(mesh, bounds);

    // grid spec: the ground-truth DSM's when available, else the scene box
    DsmSpec spec;
    if (!cfg.gt_dsm.empty() && std::filesystem::exists(cfg.gt_dsm)) {
        spec = read_dsm_asc(cfg.gt_dsm).spec;
    } else {
        spec.cell = cfg.dsm_cell_size;
        spec.x0 = bounds.easting_min();
        spec.y0 = bounds.northing_min();
        spec.width = static_cast<int>((bounds.easting_max() - bounds.easting_min()) / spec.cell);
        spec.height =
            static_cast<int>((bounds.northing_max() - bounds.northing_min()) / spec.cell);
    }
    const Dsm dsm = rasterize_dsm(mesh, spec, fill_nodata);

    ExtractSummary out;
    out.mesh_ply = cfg.output_dir / "mesh.ply";
    out.mesh_obj = cfg.output_dir / "mesh.obj";
    out.dsm_asc = cfg.output_dir / "dsm.asc";
    out.dsm_pfm = cfg.output_dir / "dsm.pfm";
    write_ply(mesh, out.mesh_ply);
    write_obj(mesh, out.mesh_obj);
    write_dsm_asc(dsm, out.dsm_asc);
    write_dsm_pfm(dsm, out.dsm_pfm);
    return out;
}

EvaluateSummary run_evaluate(const std::filesystem::path& pred_dsm,
                             const std::filesystem::path& truth_dsm,
                             const std::filesystem::path& out_csv, const std::string& scene_name,
                             bool align_median) {
    require(std::filesystem::exists(pred_dsm), "evaluate: not found: " + pred_dsm.string());
    require(std::filesystem::exists(truth_dsm), "evaluate: not found: " + truth_dsm.string());
    const Dsm pred = read_dsm_asc(pred_dsm);
    const Dsm truth = read_dsm_asc(truth_dsm);

    EvaluateSummary out;
    out.report = dsm_error_stats(pred, truth, align_median);
    out.chamfer_distance = chamfer(dsm_to_points(pred), dsm_to_points(truth));
    out.csv = out_csv;

    const bool fresh = !std::filesystem::exists(out_csv);
    if (!out_csv.parent_path().empty()) std::filesystem::create_directories(out_csv.parent_path());
    std::ofstream csv(out_csv, std::ios::app);
    if (!csv) throw IoError("evaluate: cannot write " + out_csv.string());
    if (fresh) csv << "scene,mae,med,cd,valid_fraction\n";
    csv.precision(10);
    const double joint_fraction =
        static_cast<double>(out.report.valid_cells) /
        (static_cast<double>(pred.spec.width) * pred.spec.height);
    csv << scene_name << "," << out.report.mae << "," << out.report.med << ","
        << out.chamfer_distance << "," << joint_fraction << "\n";
    return out;
}

PipelineSummary run_pipeline(const PipelineConfig& cfg, bool fill_nodata) {
    PipelineSummary summary;
    summary.synth = run_synth(cfg);

    PipelineConfig staged = cfg;
    staged.manifest = summary.synth.manifest;
    staged.gt_dsm = summary.synth.gt_dsm;
    run_fuse_depth(staged);
    const TrainSummary train = run_train(staged);
    run_extract(staged, train.final_checkpoint, fill_nodata);
    const std::string scene_name =
        cfg.scene.empty() ? "scene" : cfg.scene.stem().string();
    summary.evaluation =
        run_evaluate(staged.output_dir / "dsm.asc", staged.gt_dsm,
                     staged.output_dir / "metrics.csv", scene_name, staged.align_median);
    return summary;
}

}  // namespace satsurf
