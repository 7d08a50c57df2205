#include "satsurf/encoding.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

namespace satsurf {

namespace {

constexpr std::uint32_t kPrime2 = 2654435761u;
constexpr std::uint32_t kPrime3 = 805459861u;

std::atomic<std::int64_t> g_clamp_count{0};

struct CellLookup {
    Vec3i base;        // lower corner
    Vec3 frac;         // interpolation fractions in [0,1]
    bool clamped[3];
};

CellLookup locate(const Vec3& x, int res) {
    CellLookup c;
    for (int k = 0; k < 3; ++k) {
        double xi = x[k];
        c.clamped[k] = false;
        if (xi < -1.0) { xi = -1.0; c.clamped[k] = true; }
        if (xi > 1.0) { xi = 1.0; c.clamped[k] = true; }
        const double g = (xi + 1.0) * 0.5 * res;
        int cell = static_cast<int>(std::floor(g));
        if (cell >= res) cell = res - 1;
        if (cell < 0) cell = 0;
        c.base[k] = cell;
        c.frac[k] = g - cell;
    }
    return c;
}

}  // namespace

void HashGridConfig::validate() const {
    if (levels < 1) throw ValidationError("hash.levels must be >= 1");
    if (base_resolution < 1) throw ValidationError("hash.base_resolution must be >= 1");
    if (max_resolution < base_resolution)
        throw ValidationError("hash.max_resolution must be >= base_resolution");
    if (table_log2 < 1 || table_log2 > 30) throw ValidationError("hash.table_log2 out of range");
    if (feature_dim < 1) throw ValidationError("hash.feature_dim must be >= 1");
}

double HashGridConfig::growth() const {
    if (levels <= 1) return 1.0;
    return std::exp((std::log(double(max_resolution)) - std::log(double(base_resolution))) /
                    (levels - 1));
}

int HashGridConfig::resolution(int level) const {
    // The epsilon absorbs floating-point error in pow so the last level lands
    // exactly on max_resolution.
    return static_cast<int>(std::floor(base_resolution * std::pow(growth(), level) + 1e-6));
}

bool HashGridConfig::dense(int level) const {
    const std::int64_t n = resolution(level) + 1;
    return n * n * n <= table_size();
}

int active_levels(double lambda, int levels) {
    if (lambda < 1.0) return 0;
    const int n = static_cast<int>(std::floor(lambda));
    return n < levels ? n : levels;
}

GridGeometry GridGeometry::make(const HashGridConfig& cfg) {
    GridGeometry g;
    g.resolution.resize(cfg.levels);
    g.dense.resize(cfg.levels);
    for (int level = 0; level < cfg.levels; ++level) {
        g.resolution[level] = cfg.resolution(level);
        g.dense[level] = cfg.dense(level) ? 1 : 0;
    }
    return g;
}

namespace {

inline std::uint32_t corner_index(const HashGridConfig& cfg, const GridGeometry& geom, int level,
                                  std::uint32_t x1, std::uint32_t x2, std::uint32_t x3) {
    if (geom.dense[level]) {
        const std::uint32_t n = static_cast<std::uint32_t>(geom.resolution[level]);
        return x1 + x2 * n + x3 * n * n;
    }
    const std::uint32_t h = x1 ^ (x2 * kPrime2) ^ (x3 * kPrime3);
    return h & static_cast<std::uint32_t>(cfg.table_size() - 1);
}

}  // namespace

std::uint32_t hash_index(const HashGridConfig& cfg, int level, const Vec3i& cell) {
    const std::uint32_t x1 = static_cast<std::uint32_t>(cell[0]);
    const std::uint32_t x2 = static_cast<std::uint32_t>(cell[1]);
    const std::uint32_t x3 = static_cast<std::uint32_t>(cell[2]);
    if (cfg.dense(level)) {
        const std::uint32_t n = static_cast<std::uint32_t>(cfg.resolution(level));
        return x1 + x2 * n + x3 * n * n;
    }
    const std::uint32_t h = x1 ^ (x2 * kPrime2) ^ (x3 * kPrime3);
    return h & static_cast<std::uint32_t>(cfg.table_size() - 1);
}

void encode(const HashGridConfig& cfg, const GridGeometry& geom, std::span<const double> tables,
            const Vec3& x, double lambda, std::span<double> out) {
    const int F = cfg.feature_dim;
    const std::int64_t per_level = cfg.table_size() * F;
    const int active = active_levels(lambda, cfg.levels);

    if (x.cwiseAbs().maxCoeff() > 1.0) {
        if (g_clamp_count.fetch_add(1) == 0)
            std::fprintf(stderr, "warning: encode() clamping positions outside [-1,1]^3\n");
    }

    std::fill(out.begin(), out.end(), 0.0);
    for (int level = 0; level < active; ++level) {
        const CellLookup c = locate(x, geom.resolution[level]);
        const double* table = tables.data() + level * per_level;
        double* slot = out.data() + level * F;
        for (int corner = 0; corner < 8; ++corner) {
            const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
            const double w = (dx ? c.frac[0] : 1.0 - c.frac[0]) *
                             (dy ? c.frac[1] : 1.0 - c.frac[1]) *
                             (dz ? c.frac[2] : 1.0 - c.frac[2]);
            if (w == 0.0) continue;
            const std::uint32_t idx =
                corner_index(cfg, geom, level, static_cast<std::uint32_t>(c.base[0] + dx),
                             static_cast<std::uint32_t>(c.base[1] + dy),
                             static_cast<std::uint32_t>(c.base[2] + dz));
            const double* feat = table + std::int64_t(idx) * F;
            for (int f = 0; f < F; ++f) slot[f] += w * feat[f];
        }
    }
}

void encode(const HashGridConfig& cfg, std::span<const double> tables, const Vec3& x,
            double lambda, std::span<double> out) {
    encode(cfg, GridGeometry::make(cfg), tables, x, lambda, out);
}

void encode_backward(const HashGridConfig& cfg, const GridGeometry& geom,
                     std::span<const double> tables, const Vec3& x, double lambda,
                     std::span<const double> dout, std::span<double> grad_tables, Vec3* dx) {
    const int F = cfg.feature_dim;
    const std::int64_t per_level = cfg.table_size() * F;
    const int active = active_levels(lambda, cfg.levels);

    for (int level = 0; level < active; ++level) {
        const int res = geom.resolution[level];
        const CellLookup c = locate(x, res);
        const double* table = tables.data() + level * per_level;
        double* gtable = grad_tables.data() + level * per_level;
        const double* dslot = dout.data() + level * F;
        const double dgdx = 0.5 * res;  // d(grid coord)/d(canonical coord)
        for (int corner = 0; corner < 8; ++corner) {
            const int dxb = corner & 1, dyb = (corner >> 1) & 1, dzb = (corner >> 2) & 1;
            const double wx = dxb ? c.frac[0] : 1.0 - c.frac[0];
            const double wy = dyb ? c.frac[1] : 1.0 - c.frac[1];
            const double wz = dzb ? c.frac[2] : 1.0 - c.frac[2];
            const double w = wx * wy * wz;
            const std::uint32_t idx =
                corner_index(cfg, geom, level, static_cast<std::uint32_t>(c.base[0] + dxb),
                             static_cast<std::uint32_t>(c.base[1] + dyb),
                             static_cast<std::uint32_t>(c.base[2] + dzb));
            const std::int64_t off = std::int64_t(idx) * F;
            double dot = 0.0;
            for (int f = 0; f < F; ++f) {
                gtable[off + f] += w * dslot[f];
                dot += table[off + f] * dslot[f];
            }
            if (dx) {
                const double sx = dxb ? 1.0 : -1.0;
                const double sy = dyb ? 1.0 : -1.0;
                const double sz = dzb ? 1.0 : -1.0;
                if (!c.clamped[0]) (*dx)[0] += dot * sx * wy * wz * dgdx;
                if (!c.clamped[1]) (*dx)[1] += dot * sy * wx * wz * dgdx;
                if (!c.clamped[2]) (*dx)[2] += dot * sz * wx * wy * dgdx;
            }
        }
    }
}

void encode_backward(const HashGridConfig& cfg, std::span<const double> tables, const Vec3& x,
                     double lambda, std::span<const double> dout,
                     std::span<double> grad_tables, Vec3* dx) {
    encode_backward(cfg, GridGeometry::make(cfg), tables, x, lambda, dout, grad_tables, dx);
}

std::int64_t encode_clamp_count() { return g_clamp_count.load(); }

void FrequencyEmbedding::embed(std::span<const double> v, std::span<double> out) const {
    const int k = static_cast<int>(v.size());
    int o = 0;
    if (include_input) {
        for (int i = 0; i < k; ++i) out[o++] = v[i];
    }
    double freq = M_PI;
    for (int b = 0; b < bands; ++b) {
        for (int i = 0; i < k; ++i) out[o++] = std::sin(freq * v[i]);
        for (int i = 0; i < k; ++i) out[o++] = std::cos(freq * v[i]);
        freq *= 2.0;
    }
}

void FrequencyEmbedding::backward(std::span<const double> v, std::span<const double> dout,
                                  std::span<double> dv) const {
    const int k = static_cast<int>(v.size());
    int o = 0;
    if (include_input) {
        for (int i = 0; i < k; ++i) dv[i] += dout[o++];
    }
    double freq = M_PI;
    for (int b = 0; b < bands; ++b) {
        for (int i = 0; i < k; ++i) dv[i] += dout[o + i] * freq * std::cos(freq * v[i]);
        for (int i = 0; i < k; ++i) dv[i] -= dout[o + k + i] * freq * std::sin(freq * v[i]);
        o += 2 * k;
        freq *= 2.0;
    }
}

}  // namespace satsurf
