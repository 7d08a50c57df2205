#include "satsurf/config.hpp"

#include <fstream>
#include <sstream>

namespace satsurf {

namespace {

std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct Setter {
    PipelineConfig* cfg;
    std::filesystem::path base;

    void apply(const std::string& section, const std::string& key, const std::string& value) {
        const std::string where = section + "." + key;
        auto bad = [&](const std::string& why) {
            throw ValidationError("config: " + where + ": " + why);
        };
        auto as_double = [&] {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                bad("expected a number, got '" + value + "'");
                return 0.0;
            }
        };
        auto as_int = [&] {
            const double d = as_double();
            const auto i = static_cast<std::int64_t>(d);
            if (static_cast<double>(i) != d) bad("expected an integer, got '" + value + "'");
            return i;
        };
        auto as_bool = [&] {
            if (value == "true" || value == "1" || value == "on") return true;
            if (value == "false" || value == "0" || value == "off") return false;
            bad("expected a boolean, got '" + value + "'");
            return false;
        };
        auto as_path = [&] {
            std::filesystem::path p(value);
            return p.is_absolute() ? p : base / p;
        };

        if (section == "paths") {
            if (key == "manifest") cfg->manifest = as_path();
            else if (key == "output_dir") cfg->output_dir = as_path();
            else if (key == "scene") cfg->scene = as_path();
            else if (key == "gt_dsm") cfg->gt_dsm = as_path();
            else if (key == "fused_dir") cfg->fused_dir = as_path();
            else bad("unknown key");
        } else if (section == "hash") {
            if (key == "levels") cfg->field.grid.levels = static_cast<int>(as_int());
            else if (key == "base_resolution") cfg->field.grid.base_resolution = static_cast<int>(as_int());
            else if (key == "max_resolution") cfg->field.grid.max_resolution = static_cast<int>(as_int());
            else if (key == "table_log2") cfg->field.grid.table_log2 = static_cast<int>(as_int());
            else if (key == "feature_dim") cfg->field.grid.feature_dim = static_cast<int>(as_int());
            else if (key == "point_embed_bands") cfg->field.point_embed_bands = static_cast<int>(as_int());
            else if (key == "dir_embed_bands") cfg->field.dir_embed_bands = static_cast<int>(as_int());
            else bad("unknown key");
        } else if (section == "field") {
            if (key == "hidden_dim") cfg->field.hidden_dim = static_cast<int>(as_int());
            else if (key == "geo_feature_dim") cfg->field.geo_feature_dim = static_cast<int>(as_int());
            else bad("unknown key");
        } else if (section == "train") {
            if (key == "total_iters") cfg->train.total_iters = as_int();
            else if (key == "batch_rays") cfg->train.batch_rays = static_cast<int>(as_int());
            else if (key == "samples_per_ray") cfg->train.samples_per_ray = static_cast<int>(as_int());
            else if (key == "lambda_init") cfg->train.lambda_init = as_double();
            else if (key == "lambda_step_fraction") cfg->train.lambda_step_fraction = as_double();
            else if (key == "progressive") cfg->train.progressive = as_bool();
            else if (key == "lr_hash") cfg->train.lr_hash = as_double();
            else if (key == "lr_mlp") cfg->train.lr_mlp = as_double();
            else if (key == "lr_sigma") cfg->train.lr_sigma = as_double();
            else if (key == "beta1") cfg->train.beta1 = as_double();
            else if (key == "beta2") cfg->train.beta2 = as_double();
            else if (key == "adam_eps") cfg->train.adam_eps = as_double();
            else if (key == "seed") cfg->train.seed = static_cast<std::uint64_t>(as_int());
            else if (key == "checkpoint_every") cfg->train.checkpoint_every = as_int();
            else if (key == "opacity_gate") cfg->train.opacity_gate = as_double();
            else bad("unknown key");
        } else if (section == "loss") {
            if (key == "depth_weight") cfg->train.weights.depth = as_double();
            else if (key == "normal_weight") cfg->train.weights.normal = as_double();
            else if (key == "eikonal_weight") cfg->train.weights.eikonal = as_double();
            else if (key == "depth_fit_form") {
                if (value == "conventional") cfg->fit_form = FitForm::Conventional;
                else if (value == "literal") cfg->fit_form = FitForm::Literal;
                else bad("expected 'conventional' or 'literal'");
            } else bad("unknown key");
        } else if (section == "extract") {
            if (key == "grid_resolution") cfg->extract_resolution = static_cast<int>(as_int());
            else if (key == "iso") cfg->iso = as_double();
            else if (key == "dsm_cell_size") cfg->dsm_cell_size = as_double();
            else bad("unknown key");
        } else if (section == "eval") {
            if (key == "align_median") cfg->align_median = as_bool();
            else bad("unknown key");
        } else {
            throw ValidationError("config: unknown section [" + section + "]");
        }
    }
};

}  // namespace

PipelineConfig default_config() { return PipelineConfig{}; }

PipelineConfig validate_config(const std::filesystem::path& file) {
    PipelineConfig cfg;
    if (file.empty()) {
        cfg.field.validate();
        cfg.train.validate();
        return cfg;
    }
    std::ifstream in(file);
    if (!in) throw ValidationError("config: cannot open " + file.string());

    Setter setter{&cfg, std::filesystem::absolute(file).parent_path()};
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = strip(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected key = value at line " +
                                  std::to_string(lineno) + " of " + file.string());
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (section.empty())
            throw ValidationError("config: key '" + key + "' appears before any [section]");
        setter.apply(section, key, value);
    }

    cfg.field.validate();
    cfg.train.validate();
    if (cfg.extract_resolution < 8)
        throw ValidationError("config: extract.grid_resolution must be >= 8");
    if (cfg.dsm_cell_size <= 0)
        throw ValidationError("config: extract.dsm_cell_size must be positive");
    return cfg;
}

}  // namespace satsurf
