#pragma once

#include "satsurf/config.hpp"
#include "satsurf/metrics.hpp"
#include "satsurf/synth.hpp"

namespace satsurf {

// Pipeline stages shared by the CLI subcommands and the `pipeline` command.
// Each stage reads its inputs from disk and writes its artifacts under the
// configured output directory, leaving inputs untouched.

// scene description -> dataset under <output_dir>/dataset
SynthResult run_synth(const PipelineConfig& cfg);

struct FuseSummary {
    int images_fused = 0;
    double residual_mean = 0;   // worst view
    double residual_median = 0; // worst view
};
// manifest + relative depths + sparse CSVs -> fused PFMs and .txt sidecars
FuseSummary run_fuse_depth(const PipelineConfig& cfg);

struct TrainSummary {
    std::filesystem::path final_checkpoint;
    BatchLosses last_losses;
};
TrainSummary run_train(const PipelineConfig& cfg, const std::filesystem::path& resume_checkpoint = {},
                       const std::filesystem::path& dump_rays = {});

struct ExtractSummary {
    std::filesystem::path mesh_ply, mesh_obj, dsm_asc, dsm_pfm;
};
ExtractSummary run_extract(const PipelineConfig& cfg, const std::filesystem::path& checkpoint,
                           bool fill_nodata = false);

struct EvaluateSummary {
    DsmDiffReport report;
    double chamfer_distance = 0;
    std::filesystem::path csv;
};
// appends a "scene,mae,med,cd,valid_fraction" row
EvaluateSummary run_evaluate(const std::filesystem::path& pred_dsm,
                             const std::filesystem::path& truth_dsm,
                             const std::filesystem::path& out_csv, const std::string& scene_name,
                             bool align_median);

struct PipelineSummary {
    SynthResult synth;
    EvaluateSummary evaluation;
};
PipelineSummary run_pipeline(const PipelineConfig& cfg, bool fill_nodata = false);

}  // namespace satsurf
