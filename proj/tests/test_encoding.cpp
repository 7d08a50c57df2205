#include <doctest.h>

#include "satsurf/encoding.hpp"

using namespace satsurf;

namespace {

HashGridConfig small_grid() {
    HashGridConfig g;
    g.levels = 4;
    g.base_resolution = 4;
    g.max_resolution = 32;
    g.table_log2 = 8;
    g.feature_dim = 2;
    return g;
}

std::vector<double> random_tables(const HashGridConfig& g, std::uint64_t seed) {
    std::vector<double> t(g.parameter_count());
    RngStream rng(seed);
    for (auto& x : t) x = rng.uniform(-1.0, 1.0);
    return t;
}

// independent spatial-hash oracle in 64-bit arithmetic reduced mod 2^32
std::uint32_t hash_oracle(std::uint32_t x, std::uint32_t y, std::uint32_t z, std::int64_t T) {
    const std::uint64_t m = 0x100000000ULL;
    const std::uint64_t a = x % m;
    const std::uint64_t b = (static_cast<std::uint64_t>(y) * 2654435761ULL) % m;
    const std::uint64_t c = (static_cast<std::uint64_t>(z) * 805459861ULL) % m;
    return static_cast<std::uint32_t>((a ^ b ^ c) % static_cast<std::uint64_t>(T));
}

}  // namespace

TEST_CASE("growth factor follows the geometric schedule") {
    HashGridConfig g;
    g.levels = 24;
    g.base_resolution = 16;
    g.max_resolution = 2048;
    CHECK(g.growth() == doctest::Approx(std::exp((std::log(2048.0) - std::log(16.0)) / 23.0)));
    CHECK(g.resolution(0) == 16);
    CHECK(g.resolution(23) == 2048);
    for (int l = 1; l < 24; ++l) CHECK(g.resolution(l) >= g.resolution(l - 1));
}

TEST_CASE("hash_index: zero cell maps to zero everywhere") {
    const HashGridConfig g = small_grid();
    for (int level = 0; level < g.levels; ++level)
        CHECK(hash_index(g, level, {0, 0, 0}) == 0);
}

TEST_CASE("hash_index: dense row-major formula") {
    HashGridConfig g;
    g.levels = 2;
    g.base_resolution = 16;
    g.max_resolution = 2048;
    g.table_log2 = 19;
    REQUIRE(g.dense(0));
    CHECK(hash_index(g, 0, {1, 2, 3}) == 1 + 2 * 16 + 3 * 256);
}

TEST_CASE("hash_index: sparse levels match the XOR-prime oracle") {
    HashGridConfig g;
    g.levels = 2;
    g.base_resolution = 16;
    g.max_resolution = 512;
    g.table_log2 = 10;
    REQUIRE(!g.dense(1));
    RngStream rng(77);
    for (int i = 0; i < 1000; ++i) {
        const int x = static_cast<int>(rng.index(512));
        const int y = static_cast<int>(rng.index(512));
        const int z = static_cast<int>(rng.index(512));
        CHECK(hash_index(g, 1, {x, y, z}) ==
              hash_oracle(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                          static_cast<std::uint32_t>(z), g.table_size()));
    }
}

TEST_CASE("default 24-level grid at lambda=4 zeroes levels 5..24") {
    HashGridConfig g;
    g.levels = 24;
    g.base_resolution = 16;
    g.max_resolution = 2048;
    g.table_log2 = 10;  // small tables keep the test light
    g.feature_dim = 2;
    const auto tables = random_tables(g, 44);
    std::vector<double> out(g.output_dim());
    encode(g, tables, Vec3(0.21, -0.43, 0.65), 4.0, out);
    bool active_nonzero = false;
    for (int i = 0; i < 4 * g.feature_dim; ++i) active_nonzero |= out[i] != 0.0;
    CHECK(active_nonzero);
    for (int i = 4 * g.feature_dim; i < g.output_dim(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("encode gates off levels above lambda") {
    const HashGridConfig g = small_grid();
    const auto tables = random_tables(g, 5);
    std::vector<double> out(g.output_dim());
    encode(g, tables, Vec3(0.3, -0.2, 0.1), 2.0, out);
    bool lower_nonzero = false;
    for (int i = 0; i < 2 * g.feature_dim; ++i) lower_nonzero |= out[i] != 0.0;
    CHECK(lower_nonzero);
    for (int i = 2 * g.feature_dim; i < g.output_dim(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("encode interpolates exactly at grid vertices") {
    const HashGridConfig g = small_grid();
    const auto tables = random_tables(g, 6);
    const int level = 1;
    const int res = g.resolution(level);
    const Vec3i cell(2, 1, 3);
    const Vec3 x(-1.0 + 2.0 * cell[0] / res, -1.0 + 2.0 * cell[1] / res,
                 -1.0 + 2.0 * cell[2] / res);
    std::vector<double> out(g.output_dim());
    encode(g, tables, x, g.levels, out);
    const auto idx = hash_index(g, level, cell);
    const std::int64_t base = level * g.table_size() * g.feature_dim +
                              std::int64_t(idx) * g.feature_dim;
    for (int f = 0; f < g.feature_dim; ++f)
        CHECK(out[level * g.feature_dim + f] ==
              doctest::Approx(tables[base + f]).epsilon(1e-12));
}

TEST_CASE("encode averages the two endpoints at an edge midpoint") {
    const HashGridConfig g = small_grid();
    const auto tables = random_tables(g, 7);
    const int level = 0;
    const int res = g.resolution(level);  // 4
    // midpoint of the x-edge between (1,2,3) and (2,2,3)
    const Vec3 x(-1.0 + 2.0 * 1.5 / res, -1.0 + 2.0 * 2.0 / res, -1.0 + 2.0 * 3.0 / res);
    std::vector<double> out(g.output_dim());
    encode(g, tables, x, g.levels, out);
    const auto ia = hash_index(g, level, {1, 2, 3});
    const auto ib = hash_index(g, level, {2, 2, 3});
    const std::int64_t off = level * g.table_size() * g.feature_dim;
    for (int f = 0; f < g.feature_dim; ++f) {
        const double expect = 0.5 * (tables[off + std::int64_t(ia) * g.feature_dim + f] +
                                     tables[off + std::int64_t(ib) * g.feature_dim + f]);
        CHECK(out[level * g.feature_dim + f] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("encode is continuous across cell boundaries") {
    const HashGridConfig g = small_grid();
    const auto tables = random_tables(g, 8);
    const int res = g.resolution(g.levels - 1);
    const double boundary = -1.0 + 2.0 * 5.0 / res;  // a shared face of the finest level
    std::vector<double> lo(g.output_dim()), hi(g.output_dim());
    encode(g, tables, Vec3(boundary - 1e-12, 0.37, -0.41), g.levels, lo);
    encode(g, tables, Vec3(boundary + 1e-12, 0.37, -0.41), g.levels, hi);
    for (int i = 0; i < g.output_dim(); ++i) CHECK(std::fabs(lo[i] - hi[i]) < 1e-9);
}

TEST_CASE("gate monotonicity: active set grows with lambda") {
    CHECK(active_levels(0.0, 8) == 0);
    CHECK(active_levels(1.0, 8) == 1);
    CHECK(active_levels(4.7, 8) == 4);
    CHECK(active_levels(9.0, 8) == 8);
    for (double l1 = 0; l1 < 10; l1 += 0.31)
        for (double l2 = l1; l2 < 10; l2 += 0.47)
            CHECK(active_levels(l1, 8) <= active_levels(l2, 8));
}

TEST_CASE("encode determinism") {
    const HashGridConfig g = small_grid();
    const auto tables = random_tables(g, 9);
    std::vector<double> a(g.output_dim()), b(g.output_dim());
    encode(g, tables, Vec3(0.123, -0.456, 0.789), 3.0, a);
    encode(g, tables, Vec3(0.123, -0.456, 0.789), 3.0, b);
    CHECK(a == b);
}

TEST_CASE("frequency embedding basic identities") {
    FrequencyEmbedding emb{1, true};
    const double v = 0.5;
    std::vector<double> out(emb.out_dim(1));
    emb.embed(std::span<const double>(&v, 1), out);
    CHECK(out[0] == 0.5);
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-12));  // sin(pi/2)
    CHECK(std::fabs(out[2]) < 1e-12);                       // cos(pi/2)

    FrequencyEmbedding emb6{6, true};
    CHECK(emb6.out_dim(3) == 39);

    const double zeros[3] = {0, 0, 0};
    std::vector<double> z(emb6.out_dim(3));
    emb6.embed(std::span<const double>(zeros, 3), z);
    for (int i = 0; i < 3; ++i) CHECK(z[i] == 0.0);
    for (int b = 0; b < 6; ++b) {
        for (int i = 0; i < 3; ++i) {
            CHECK(z[3 + 6 * b + i] == 0.0);                      // sines
            CHECK(z[3 + 6 * b + 3 + i] == doctest::Approx(1.0)); // cosines
        }
    }
}

TEST_CASE("frequency embedding backward matches finite differences") {
    FrequencyEmbedding emb{3, true};
    const double v0[2] = {0.31, -0.77};
    std::vector<double> base(emb.out_dim(2)), up(emb.out_dim(2)), dn(emb.out_dim(2));
    emb.embed(std::span<const double>(v0, 2), base);
    RngStream rng(4);
    std::vector<double> dout(base.size());
    for (auto& d : dout) d = rng.uniform(-1, 1);

    double dv[2] = {0, 0};
    emb.backward(std::span<const double>(v0, 2), dout, dv);

    const double h = 1e-7;
    for (int k = 0; k < 2; ++k) {
        double vp[2] = {v0[0], v0[1]}, vm[2] = {v0[0], v0[1]};
        vp[k] += h;
        vm[k] -= h;
        emb.embed(std::span<const double>(vp, 2), up);
        emb.embed(std::span<const double>(vm, 2), dn);
        double fd = 0;
        for (std::size_t i = 0; i < dout.size(); ++i) fd += dout[i] * (up[i] - dn[i]) / (2 * h);
        CHECK(dv[k] == doctest::Approx(fd).epsilon(1e-6));
    }
}
