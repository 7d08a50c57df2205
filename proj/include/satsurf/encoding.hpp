#pragma once

#include <cstdint>
#include <span>

#include "satsurf/common.hpp"

namespace satsurf {

struct HashGridConfig {
    int levels = 24;
    int base_resolution = 16;
    int max_resolution = 2048;
    int table_log2 = 19;       // entries per level = 2^table_log2
    int feature_dim = 2;

    void validate() const;

    std::int64_t table_size() const { return std::int64_t(1) << table_log2; }
    std::int64_t parameter_count() const { return std::int64_t(levels) * table_size() * feature_dim; }
    int output_dim() const { return levels * feature_dim; }

    // growth factor b; 1 when there is a single level
    double growth() const;
    // per-axis resolution of a level (0-based): floor(N_min * b^level)
    int resolution(int level) const;
    // dense row-major indexing is used when the level's full vertex grid fits
    bool dense(int level) const;
};

// Number of active levels for gate value lambda: level i (1-based) is active
// iff lambda >= i.
int active_levels(double lambda, int levels);

// Per-level grid geometry hoisted out of the per-point hot path.
struct GridGeometry {
    std::vector<int> resolution;
    std::vector<std::uint8_t> dense;

    static GridGeometry make(const HashGridConfig& cfg);
};

// Table index of an integer grid vertex. Dense levels use row-major indexing
// with stride N; sparse levels use the XOR-of-primes spatial hash.
std::uint32_t hash_index(const HashGridConfig& cfg, int level, const Vec3i& cell);

// Trilinear, progressively gated feature lookup. `tables` holds all levels,
// level-major; `out` receives levels*feature_dim values (gated-off levels are
// exact zeros). Positions outside [-1,1]^3 are clamped (counted, warned once).
void encode(const HashGridConfig& cfg, const GridGeometry& geom, std::span<const double> tables,
            const Vec3& x, double lambda, std::span<double> out);
void encode(const HashGridConfig& cfg, std::span<const double> tables, const Vec3& x,
            double lambda, std::span<double> out);

// Accumulates d(out)/d(tables) contributions into grad_tables and, when dx is
// non-null, adds the positional gradient (zero along clamped axes).
void encode_backward(const HashGridConfig& cfg, const GridGeometry& geom,
                     std::span<const double> tables, const Vec3& x, double lambda,
                     std::span<const double> dout, std::span<double> grad_tables, Vec3* dx);
void encode_backward(const HashGridConfig& cfg, std::span<const double> tables, const Vec3& x,
                     double lambda, std::span<const double> dout,
                     std::span<double> grad_tables, Vec3* dx);

std::int64_t encode_clamp_count();

// Sine/cosine octave embedding. Layout: [v, sin(pi v), cos(pi v),
// sin(2 pi v), cos(2 pi v), ...] with each block holding all components.
struct FrequencyEmbedding {
    int bands = 6;
    bool include_input = true;

    int out_dim(int in_dim) const { return in_dim * (2 * bands + (include_input ? 1 : 0)); }
    void embed(std::span<const double> v, std::span<double> out) const;
    // chain rule: dv += J^T dout
    void backward(std::span<const double> v, std::span<const double> dout,
                  std::span<double> dv) const;
};

}  // namespace satsurf
