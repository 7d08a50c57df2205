#include "satsurf/dataset.hpp"

#include <cmath>
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

}  // namespace

SceneBounds Manifest::bounds() const {
    return SceneBounds(lat_min, lat_max, lon_min, lon_max, alt_ref_lower, alt_ref_upper,
                       parse_utm_zone(utm_zone));
}

Manifest Manifest::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("manifest: cannot open " + file.string());
    const auto base = file.parent_path();

    Manifest m;
    ImageEntry* current = nullptr;
    bool saw_header[7] = {};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty() || line[0] == '#') continue;
        if (line == "[image]") {
            m.images.emplace_back();
            current = &m.images.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("manifest: expected key = value at line " + std::to_string(lineno) +
                          " of " + file.string());
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        auto path_of = [&](const std::string& v) {
            std::filesystem::path p(v);
            return p.is_absolute() ? p : base / p;
        };
        if (current) {
            if (key == "rpc") current->rpc = path_of(value);
            else if (key == "image") current->image = path_of(value);
            else if (key == "mask") current->mask = path_of(value);
            else if (key == "depth") current->depth = path_of(value);
            else if (key == "sparse") current->sparse = path_of(value);
            else if (key == "sun_azimuth_deg") current->sun_azimuth_deg = std::stod(value);
            else if (key == "sun_elevation_deg") current->sun_elevation_deg = std::stod(value);
            else throw IoError("manifest: unknown image key '" + key + "' in " + file.string());
        } else {
            if (key == "lat_min") { m.lat_min = std::stod(value); saw_header[0] = true; }
            else if (key == "lat_max") { m.lat_max = std::stod(value); saw_header[1] = true; }
            else if (key == "lon_min") { m.lon_min = std::stod(value); saw_header[2] = true; }
            else if (key == "lon_max") { m.lon_max = std::stod(value); saw_header[3] = true; }
            else if (key == "alt_ref_lower") { m.alt_ref_lower = std::stod(value); saw_header[4] = true; }
            else if (key == "alt_ref_upper") { m.alt_ref_upper = std::stod(value); saw_header[5] = true; }
            else if (key == "utm_zone") { m.utm_zone = value; saw_header[6] = true; }
            else throw IoError("manifest: unknown header key '" + key + "' in " + file.string());
        }
    }
    for (bool b : saw_header)
        if (!b) throw IoError("manifest: incomplete scene header in " + file.string());
    if (m.images.empty()) throw EmptyDatasetError("manifest: no [image] entries in " + file.string());
    for (const auto& e : m.images)
        if (e.rpc.empty() || e.image.empty())
            throw IoError("manifest: every [image] needs rpc and image paths: " + file.string());
    return m;
}

void Manifest::save(const std::filesystem::path& file) const {
    std::ofstream out(file);
    if (!out) throw IoError("manifest: cannot write " + file.string());
    const auto base = file.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
        if (p.empty()) return std::string();
        std::error_code ec;
        const auto r = std::filesystem::relative(p, base, ec);
        return ec ? p.string() : r.string();
    };
    out.precision(17);
    out << "lat_min = " << lat_min << "\n"
        << "lat_max = " << lat_max << "\n"
        << "lon_min = " << lon_min << "\n"
        << "lon_max = " << lon_max << "\n"
        << "alt_ref_lower = " << alt_ref_lower << "\n"
        << "alt_ref_upper = " << alt_ref_upper << "\n"
        << "utm_zone = " << utm_zone << "\n";
    for (const auto& e : images) {
        out << "\n[image]\n";
        out << "rpc = " << rel(e.rpc) << "\n";
        out << "image = " << rel(e.image) << "\n";
        if (!e.mask.empty()) out << "mask = " << rel(e.mask) << "\n";
        if (!e.depth.empty()) out << "depth = " << rel(e.depth) << "\n";
        if (!e.sparse.empty()) out << "sparse = " << rel(e.sparse) << "\n";
        out << "sun_azimuth_deg = " << e.sun_azimuth_deg << "\n";
        out << "sun_elevation_deg = " << e.sun_elevation_deg << "\n";
    }
}

Vec3 sun_direction_canonical(double azimuth_deg, double elevation_deg,
                             const SceneBounds& bounds) {
    const double az = azimuth_deg * M_PI / 180.0;
    const double el = elevation_deg * M_PI / 180.0;
    const Vec3 enu(std::sin(az) * std::cos(el), std::cos(az) * std::cos(el), std::sin(el));
    const Vec3 scales = bounds.axis_scales_m();
    return enu.cwiseQuotient(scales).normalized();
}

std::int64_t Dataset::interior_pixels() const {
    std::int64_t n = 0;
    for (const auto& v : views)
        n += std::int64_t(std::max(v.width - 2, 0)) * std::max(v.height - 2, 0);
    return n;
}

Dataset load_dataset(const Manifest& manifest, const std::filesystem::path& fused_dir) {
    Dataset ds(manifest.bounds());
    ds.views.resize(manifest.images.size());

    for (std::size_t k = 0; k < manifest.images.size(); ++k) {
        const ImageEntry& entry = manifest.images[k];
        TrainView& view = ds.views[k];
        view.rpc = RpcModel::load(entry.rpc);
        view.sun_dir =
            sun_direction_canonical(entry.sun_azimuth_deg, entry.sun_elevation_deg, ds.bounds);

        const ImageU8 img = read_png(entry.image);
        view.width = img.width;
        view.height = img.height;
        const std::size_t npix = std::size_t(img.width) * img.height;
        view.rgb.resize(npix * 3);
        for (std::size_t i = 0; i < npix; ++i)
            for (int c = 0; c < 3; ++c)
                view.rgb[i * 3 + c] =
                    img.data[i * img.channels + (img.channels == 3 ? c : 0)] / 255.0f;

        view.mask.assign(npix, 1);
        if (!entry.mask.empty()) {
            const ImageU8 mask = read_png(entry.mask);
            if (mask.width != img.width || mask.height != img.height)
                throw ValidationError("dataset: mask size mismatch for " + entry.image.string());
            for (std::size_t i = 0; i < npix; ++i)
                view.mask[i] = mask.data[i * mask.channels] >= 128 ? 1 : 0;
        }

        // consistency targets come from the relative depth map
        if (!entry.depth.empty() && std::filesystem::exists(entry.depth)) {
            const FloatImage rel = read_pfm(entry.depth);
            if (rel.width != img.width || rel.height != img.height)
                throw ValidationError("dataset: depth size mismatch for " + entry.image.string());
            const NormalMap normals = normals_from_depth(rel);
            view.delta_gt.assign(normals.delta.begin(), normals.delta.end());
            view.delta_valid.assign(npix, 0);
            for (std::size_t i = 0; i < npix; ++i)
                view.delta_valid[i] = std::isfinite(rel.data[i]) ? 1 : 0;
        }

        // fused absolute depth written by the fuse-depth stage
        const auto fused_path = fused_dir / (entry.image.stem().string() + ".pfm");
        if (std::filesystem::exists(fused_path)) {
            const FloatImage fused = read_pfm(fused_path);
            if (fused.width != img.width || fused.height != img.height)
                throw ValidationError("dataset: fused depth size mismatch for " +
                                      fused_path.string());
            view.has_depth = true;
            view.fused_depth.assign(fused.data.begin(), fused.data.end());
            view.depth_valid.assign(npix, 0);
            for (std::size_t i = 0; i < npix; ++i)
                view.depth_valid[i] = (view.mask[i] && std::isfinite(fused.data[i])) ? 1 : 0;
        }

        view.rays.resize(npix);
        parallel_for(static_cast<std::int64_t>(npix), [&](std::int64_t i, int) {
            const int u = static_cast<int>(i) / img.width;
            const int v = static_cast<int>(i) % img.width;
            view.rays[i] = make_ray(view.rpc, u, v, ds.bounds);
        });
    }
    return ds;
}

}  // namespace satsurf
