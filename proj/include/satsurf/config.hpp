#pragma once

#include "satsurf/priors.hpp"
#include "satsurf/train.hpp"

namespace satsurf {

// Pipeline configuration parsed from a sectioned key = value file. Every key
// has a default; unknown keys are rejected with their section-qualified name.
struct PipelineConfig {
    // [paths]
    std::filesystem::path manifest;
    std::filesystem::path output_dir;
    std::filesystem::path scene;
    std::filesystem::path gt_dsm;
    std::filesystem::path fused_dir;  // defaults to <output_dir>/fused

    FieldConfig field;   // [hash] + [field]
    TrainConfig train;   // [train] + [loss] weights
    FitForm fit_form = FitForm::Conventional;  // [loss] depth_fit_form

    // [extract]
    int extract_resolution = 128;
    double iso = 0.0;
    double dsm_cell_size = 0.5;

    // [eval]
    bool align_median = false;

    std::filesystem::path fused_directory() const {
        return fused_dir.empty() ? output_dir / "fused" : fused_dir;
    }
};

// Parses and validates; an empty file (or missing path argument) yields the
// full default set. Throws ValidationError naming the offending key.
PipelineConfig validate_config(const std::filesystem::path& file);
PipelineConfig default_config();

}  // namespace satsurf
