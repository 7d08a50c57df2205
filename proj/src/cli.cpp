#include "satsurf/cli.hpp"

#include <CLI11.hpp>
#include <iostream>

#include "satsurf/pipeline.hpp"

namespace satsurf {

namespace {

struct CommonArgs {
    std::string config;
    std::int64_t seed = -1;
    int threads = 0;

    PipelineConfig load() const {
        PipelineConfig cfg = validate_config(config.empty() ? std::filesystem::path{}
                                                            : std::filesystem::path(config));
        if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
        if (threads > 0) set_thread_count(threads);
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
    auto* opt = cmd->add_option("--config", args.config, "pipeline configuration file");
    if (config_required) opt->required();
    cmd->add_option("--seed", args.seed, "override [train] seed");
    cmd->add_option("--threads", args.threads, "worker count (default: hardware)");
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"multi-view satellite surface reconstruction"};
    app.require_subcommand(1);

    CommonArgs synth_args, fuse_args, train_args, extract_args, pipeline_args;
    std::string checkpoint, resume, dump_rays;
    bool fill_nodata = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth, synth_args);

    auto* fuse = app.add_subcommand("fuse-depth", "fit scale/offset and write fused depth maps");
    add_common(fuse, fuse_args);

    auto* train = app.add_subcommand("train", "optimize the field on a dataset");
    add_common(train, train_args);
    train->add_option("--checkpoint", resume, "resume from a checkpoint");
    train->add_option("--dump-rays", dump_rays, "write a per-ray t/sdf/alpha/weight CSV");

    auto* extract = app.add_subcommand("extract", "checkpoint -> mesh (PLY/OBJ) + DSM (.asc)");
    add_common(extract, extract_args);
    extract->add_option("--checkpoint", checkpoint, "checkpoint to extract from");
    extract->add_flag("--fill-nodata", fill_nodata, "inverse-distance fill of empty DSM cells");

    std::string eval_pred, eval_truth, eval_out = "metrics.csv", eval_scene = "scene";
    bool eval_align = false;
    int eval_threads = 0;
    auto* evaluate = app.add_subcommand("evaluate", "compare two DSMs and append a metrics row");
    evaluate->add_option("pred", eval_pred, "reconstructed DSM (.asc)")->required();
    evaluate->add_option("truth", eval_truth, "ground-truth DSM (.asc)")->required();
    evaluate->add_option("--out", eval_out, "metrics CSV to append to");
    evaluate->add_option("--scene-name", eval_scene, "scene label for the CSV row");
    evaluate->add_flag("--align-median", eval_align, "remove the median vertical offset first");
    evaluate->add_option("--threads", eval_threads, "worker count");

    auto* pipeline =
        app.add_subcommand("pipeline", "synth + fuse-depth + train + extract + evaluate");
    add_common(pipeline, pipeline_args);
    pipeline->add_flag("--fill-nodata", fill_nodata, "inverse-distance fill of empty DSM cells");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            const auto result = run_synth(synth_args.load());
            std::cerr << "wrote " << result.manifest.string() << "\n";
        } else if (fuse->parsed()) {
            const auto summary = run_fuse_depth(fuse_args.load());
            std::cerr << "fused " << summary.images_fused
                      << " views; worst residual median " << summary.residual_median << "\n";
        } else if (train->parsed()) {
            const auto summary = run_train(train_args.load(), resume, dump_rays);
            std::cerr << "final checkpoint " << summary.final_checkpoint.string() << "\n";
        } else if (extract->parsed()) {
            const PipelineConfig cfg = extract_args.load();
            std::filesystem::path ck = checkpoint.empty()
                                           ? cfg.output_dir / "checkpoints" / "ckpt_final.bin"
                                           : std::filesystem::path(checkpoint);
            const auto summary = run_extract(cfg, ck, fill_nodata);
            std::cerr << "wrote " << summary.mesh_ply.string() << " and "
                      << summary.dsm_asc.string() << "\n";
        } else if (evaluate->parsed()) {
            if (eval_threads > 0) set_thread_count(eval_threads);
            const auto summary =
                run_evaluate(eval_pred, eval_truth, eval_out, eval_scene, eval_align);
            std::cerr << "mae " << summary.report.mae << "  med " << summary.report.med
                      << "  cd " << summary.chamfer_distance << "\n";
        } else if (pipeline->parsed()) {
            const auto summary = run_pipeline(pipeline_args.load(), fill_nodata);
            std::cerr << "mae " << summary.evaluation.report.mae << "  med "
                      << summary.evaluation.report.med << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace satsurf
