#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "satsurf/dataset.hpp"
#include "satsurf/image_io.hpp"

using namespace satsurf;

namespace {

std::filesystem::path temp_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("pfm roundtrip preserves floats exactly") {
    const auto dir = temp_dir("satsurf_pfm_test");
    FloatImage img(7, 5);
    RngStream rng(2);
    for (auto& x : img.data) x = static_cast<float>(rng.uniform(-100, 100));
    img.at(2, 3) = 0.0f;
    const auto file = dir / "img.pfm";
    write_pfm(file, img);
    const FloatImage back = read_pfm(file);
    REQUIRE(back.width == 7);
    REQUIRE(back.height == 5);
    CHECK(back.data == img.data);
    std::filesystem::remove_all(dir);
}

TEST_CASE("png roundtrip for gray and rgb") {
    const auto dir = temp_dir("satsurf_png_test");
    ImageU8 rgb;
    rgb.width = 9;
    rgb.height = 4;
    rgb.channels = 3;
    rgb.data.resize(9 * 4 * 3);
    RngStream rng(4);
    for (auto& x : rgb.data) x = static_cast<std::uint8_t>(rng.index(256));
    write_png(dir / "c.png", rgb);
    const ImageU8 back = read_png(dir / "c.png");
    CHECK(back.channels == 3);
    CHECK(back.data == rgb.data);

    ImageU8 gray;
    gray.width = 5;
    gray.height = 6;
    gray.channels = 1;
    gray.data.resize(30);
    for (auto& x : gray.data) x = static_cast<std::uint8_t>(rng.index(256));
    write_png(dir / "g.png", gray);
    const ImageU8 gback = read_png(dir / "g.png");
    CHECK(gback.channels == 1);
    CHECK(gback.data == gray.data);
    std::filesystem::remove_all(dir);
}

TEST_CASE("png writing is byte-deterministic") {
    const auto dir = temp_dir("satsurf_png_det");
    ImageU8 img;
    img.width = 16;
    img.height = 16;
    img.channels = 3;
    img.data.resize(16 * 16 * 3);
    RngStream rng(8);
    for (auto& x : img.data) x = static_cast<std::uint8_t>(rng.index(256));
    write_png(dir / "a.png", img);
    write_png(dir / "b.png", img);
    std::ifstream fa(dir / "a.png", std::ios::binary), fb(dir / "b.png", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest roundtrip with optional paths") {
    const auto dir = temp_dir("satsurf_manifest_test");
    Manifest m;
    m.lat_min = 30.34;
    m.lat_max = 30.342;
    m.lon_min = -81.67;
    m.lon_max = -81.668;
    m.alt_ref_lower = -10;
    m.alt_ref_upper = 50;
    m.utm_zone = "17N";
    ImageEntry e;
    e.rpc = dir / "rpc" / "v0.rpc";
    e.image = dir / "images" / "v0.png";
    e.depth = dir / "depth" / "v0.pfm";
    e.sun_azimuth_deg = 123.5;
    e.sun_elevation_deg = 44.25;
    m.images.push_back(e);
    ImageEntry e2 = e;
    e2.rpc = dir / "rpc" / "v1.rpc";
    e2.image = dir / "images" / "v1.png";
    e2.depth.clear();  // optional
    m.images.push_back(e2);

    const auto file = dir / "manifest.txt";
    m.save(file);
    const Manifest back = Manifest::load(file);
    CHECK(back.lat_min == m.lat_min);
    CHECK(back.utm_zone == "17N");
    REQUIRE(back.images.size() == 2);
    CHECK(back.images[0].depth == e.depth);
    CHECK(back.images[1].depth.empty());
    CHECK(back.images[0].sun_azimuth_deg == 123.5);

    // unknown keys are rejected
    std::ofstream bad(dir / "bad.txt");
    bad << "lat_min = 1\nlat_max = 2\nlon_min = 3\nlon_max = 4\n"
        << "alt_ref_lower = 0\nalt_ref_upper = 1\nutm_zone = 17N\nbogus = 1\n";
    bad.close();
    CHECK_THROWS_AS(Manifest::load(dir / "bad.txt"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sun direction points up and respects azimuth") {
    const SceneBounds b(30.340, 30.342, -81.670, -81.668, -10.0, 50.0, parse_utm_zone("17N"));
    const Vec3 up = sun_direction_canonical(0.0, 90.0, b);
    CHECK(up.z() == doctest::Approx(1.0));
    const Vec3 east = sun_direction_canonical(90.0, 10.0, b);
    CHECK(east.x() > 0.5);
    CHECK(std::fabs(east.y()) < 1e-9);
    CHECK(east.norm() == doctest::Approx(1.0));
}
