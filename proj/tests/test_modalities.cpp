#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fpd/image.hpp"
#include "fpd/landmarks.hpp"
#include "fpd/raster.hpp"
#include "fpd/rng.hpp"

using namespace fpd;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "fpd_modalities";
    std::filesystem::create_directories(dir);
    return dir;
}

LandmarkSet ramp_landmarks() {
    LandmarkSet lm;
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        double t = static_cast<double>(i) / 477.0;
        lm.points[i] = {t, t, 0.0};
    }
    return lm;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

// reference bilinear sample with half-pixel centers, written from scratch
double oracle_bilinear(const std::vector<double>& img, std::size_t h, std::size_t w,
                       std::size_t oh, std::size_t ow, std::size_t oy, std::size_t ox) {
    double fy = (oy + 0.5) * static_cast<double>(h) / static_cast<double>(oh) - 0.5;
    double fx = (ox + 0.5) * static_cast<double>(w) / static_cast<double>(ow) - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
    std::size_t y0 = static_cast<std::size_t>(fy), x0 = static_cast<std::size_t>(fx);
    std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
    double dy = fy - y0, dx = fx - x0;
    return (1 - dy) * ((1 - dx) * img[y0 * w + x0] + dx * img[y0 * w + x1]) +
           dy * ((1 - dx) * img[y1 * w + x0] + dx * img[y1 * w + x1]);
}

}  // namespace

TEST_CASE("subset selection on a ramp reproduces the ramp") {
    LandmarkSet lm = ramp_landmarks();
    CoordinateMatrix m = select_landmark_subset(lm, iota_indices(kSubsetSize));
    for (std::size_t r = 0; r < kSubsetSize; ++r) {
        CHECK(m.coords[r][0] == doctest::Approx(r / 477.0));
        CHECK(m.coords[r][1] == doctest::Approx(r / 477.0));
    }
    Tensor<float> t = m.to_tensor();
    CHECK(t.shape() == std::vector<std::size_t>({125, 2}));
}

TEST_CASE("subset selection follows the index list order") {
    LandmarkSet lm = ramp_landmarks();
    auto idx = iota_indices(kSubsetSize);
    // brute-force oracle: permute the list, rows must permute identically
    Rng rng(12);
    std::vector<std::size_t> perm = idx;
    rng.shuffle(perm);
    CoordinateMatrix base = select_landmark_subset(lm, idx);
    CoordinateMatrix permuted = select_landmark_subset(lm, perm);
    for (std::size_t r = 0; r < kSubsetSize; ++r) {
        std::size_t src = perm[r];
        auto it = std::find(idx.begin(), idx.end(), src);
        std::size_t base_row = static_cast<std::size_t>(it - idx.begin());
        CHECK(permuted.coords[r] == base.coords[base_row]);
    }
}

TEST_CASE("subset selection never reads z") {
    LandmarkSet a = ramp_landmarks();
    LandmarkSet b = a;
    for (auto& p : b.points) p.z += 123.456;
    auto idx = iota_indices(kSubsetSize);
    CoordinateMatrix ma = select_landmark_subset(a, idx);
    CoordinateMatrix mb = select_landmark_subset(b, idx);
    for (std::size_t r = 0; r < kSubsetSize; ++r) CHECK(ma.coords[r] == mb.coords[r]);
}

TEST_CASE("subset spec violations are rejected") {
    LandmarkSet lm = ramp_landmarks();
    auto idx = iota_indices(kSubsetSize);

    auto too_few = idx;
    too_few.pop_back();
    CHECK_THROWS_AS(select_landmark_subset(lm, too_few), Error);

    auto dup = idx;
    dup[5] = dup[6];
    CHECK_THROWS_AS(select_landmark_subset(lm, dup), Error);

    auto oob = idx;
    oob[0] = kLandmarkCount;
    CHECK_THROWS_AS(select_landmark_subset(lm, oob), Error);
}

TEST_CASE("default subset has 125 unique in-range indices") {
    const auto& idx = default_subset_indices();
    CHECK(idx.size() == kSubsetSize);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    CHECK(unique.size() == kSubsetSize);
    for (std::size_t i : idx) CHECK(i < kLandmarkCount);
}

TEST_CASE("landmark and blendshape files round-trip, with strict counts") {
    auto dir = temp_dir();
    LandmarkSet lm = ramp_landmarks();
    save_landmarks(dir / "lm.txt", lm);
    LandmarkSet loaded = load_landmarks(dir / "lm.txt");
    for (std::size_t i = 0; i < kLandmarkCount; ++i)
        CHECK(loaded.points[i].x == doctest::Approx(lm.points[i].x).epsilon(1e-9));

    // 477 lines must name the expected count
    {
        std::ofstream out(dir / "short.txt");
        for (int i = 0; i < 477; ++i) out << "0.5,0.5,0\n";
    }
    try {
        load_landmarks(dir / "short.txt");
        FAIL("expected input error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("478") != std::string::npos);
        CHECK(std::string(e.what()).find("477") != std::string::npos);
    }

    std::vector<std::pair<std::string, double>> bs;
    for (std::size_t i = 0; i < kBlendshapeCount; ++i)
        bs.emplace_back("shape" + std::to_string(i), 0.01 * static_cast<double>(i));
    save_blendshapes(dir / "bs.txt", bs);
    BlendshapeVector v = load_blendshapes(dir / "bs.txt");
    CHECK(v.values[51] == doctest::Approx(0.51));
}

TEST_CASE("blendshape values outside [0,1] are rejected, not clamped") {
    auto dir = temp_dir();
    std::vector<std::pair<std::string, double>> bs;
    for (std::size_t i = 0; i < kBlendshapeCount; ++i) bs.emplace_back("s", 0.5);
    bs[10].second = 1.5;
    save_blendshapes(dir / "bad.txt", bs);
    CHECK_THROWS_AS(load_blendshapes(dir / "bad.txt"), Error);
}

TEST_CASE("empty contour spec rasterizes to all black") {
    LandmarkSet lm = ramp_landmarks();
    BnwRaster r = rasterize_contours(lm, ContourSpec{}, 32, 32);
    CHECK(r.count_set() == 0);
    CHECK(r.pixels.size() == 32 * 32);
}

TEST_CASE("horizontal segment fills exactly one pixel row") {
    LandmarkSet lm;
    lm.points[0] = {0.0, 0.5, 0.0};
    lm.points[1] = {1.0, 0.5, 0.0};
    ContourSpec spec;
    spec.groups.push_back({"seg", false, {0, 1}});
    BnwRaster r = rasterize_contours(lm, spec, 11, 11);

    // brute-force membership oracle: the expected set is {(x,5) : 0<=x<=10}
    std::set<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t x = 0; x <= 10; ++x) expected.insert({x, 5});
    std::set<std::pair<std::size_t, std::size_t>> got;
    for (std::size_t y = 0; y < 11; ++y)
        for (std::size_t x = 0; x < 11; ++x)
            if (r.at(x, y)) got.insert({x, y});
    CHECK(got == expected);
}

TEST_CASE("bresenham segment pixel count is max(|dx|,|dy|)+1") {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        int x0 = static_cast<int>(rng.below(64)), y0 = static_cast<int>(rng.below(64));
        int x1 = static_cast<int>(rng.below(64)), y1 = static_cast<int>(rng.below(64));
        std::vector<std::pair<int, int>> pts;
        bresenham_line(x0, y0, x1, y1, pts);
        std::size_t expect =
            static_cast<std::size_t>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
        CHECK(pts.size() == expect);
        // distinct pixels
        std::set<std::pair<int, int>> unique(pts.begin(), pts.end());
        CHECK(unique.size() == pts.size());
    }
}

TEST_CASE("bresenham paths are 8-connected between the endpoint pixels") {
    Rng rng(78);
    for (int trial = 0; trial < 200; ++trial) {
        int x0 = static_cast<int>(rng.below(48)), y0 = static_cast<int>(rng.below(48));
        int x1 = static_cast<int>(rng.below(48)), y1 = static_cast<int>(rng.below(48));
        std::vector<std::pair<int, int>> pts;
        bresenham_line(x0, y0, x1, y1, pts);
        CHECK(pts.front() == std::make_pair(x0, y0));
        CHECK(pts.back() == std::make_pair(x1, y1));
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(std::abs(pts[i].first - pts[i - 1].first) <= 1);
            CHECK(std::abs(pts[i].second - pts[i - 1].second) <= 1);
        }
    }
}

TEST_CASE("rasterization is deterministic and closes closed groups") {
    Rng rng(5);
    LandmarkSet lm;
    for (auto& p : lm.points) p = {rng.uniform(), rng.uniform(), 0.0};
    ContourSpec spec;
    spec.groups.push_back({"tri", true, {3, 90, 200}});
    spec.groups.push_back({"line", false, {10, 20, 30}});
    BnwRaster a = rasterize_contours(lm, spec, 64, 64);
    BnwRaster b = rasterize_contours(lm, spec, 64, 64);
    CHECK(a.pixels == b.pixels);
    CHECK(a.count_set() > 0);

    // the closing segment of a closed triangle adds pixels an open one lacks
    ContourSpec open_spec;
    open_spec.groups.push_back({"tri", false, {3, 90, 200}});
    BnwRaster open_r = rasterize_contours(lm, open_spec, 64, 64);
    CHECK(open_r.count_set() < a.count_set());
}

TEST_CASE("raster spec errors") {
    LandmarkSet lm = ramp_landmarks();
    ContourSpec bad;
    bad.groups.push_back({"oob", false, {1, kLandmarkCount + 3}});
    CHECK_THROWS_AS(rasterize_contours(lm, bad, 32, 32), Error);

    ContourSpec single;
    single.groups.push_back({"single", false, {1}});
    CHECK_THROWS_AS(rasterize_contours(lm, single, 32, 32), Error);

    CHECK_THROWS_AS(rasterize_contours(lm, ContourSpec{}, 4, 32), Error);
}

TEST_CASE("default contour spec references valid landmarks") {
    const ContourSpec& spec = default_contour_spec();
    CHECK(spec.groups.size() >= 3);
    for (const auto& g : spec.groups) {
        CHECK(g.indices.size() >= 2);
        for (std::size_t i : g.indices) CHECK(i < kLandmarkCount);
    }
    LandmarkSet lm = ramp_landmarks();
    BnwRaster r = rasterize_contours(lm, spec, 224, 224);
    CHECK(r.count_set() > 0);
}

TEST_CASE("contour spec files round-trip") {
    auto dir = temp_dir();
    save_contour_spec(dir / "contours.json", default_contour_spec());
    ContourSpec loaded = load_contour_spec(dir / "contours.json");
    REQUIRE(loaded.groups.size() == default_contour_spec().groups.size());
    for (std::size_t i = 0; i < loaded.groups.size(); ++i) {
        CHECK(loaded.groups[i].name == default_contour_spec().groups[i].name);
        CHECK(loaded.groups[i].closed == default_contour_spec().groups[i].closed);
        CHECK(loaded.groups[i].indices == default_contour_spec().groups[i].indices);
    }
}

TEST_CASE("constant gray image preprocesses to a constant tensor") {
    ImageU8 img;
    img.width = img.height = 16;
    img.rgb.assign(16 * 16 * 3, 128);
    Tensor<float> t = preprocess_rgb(img, 8);
    CHECK(t.shape() == std::vector<std::size_t>({3, 8, 8}));
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == doctest::Approx(128.0 / 255.0).epsilon(1e-6));
}

TEST_CASE("resize to the native size changes nothing") {
    Rng rng(9);
    ImageU8 img;
    img.width = img.height = 12;
    img.rgb.resize(12 * 12 * 3);
    for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng.below(256));
    Tensor<float> t = preprocess_rgb(img, 12);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < 12; ++y)
            for (std::size_t x = 0; x < 12; ++x)
                CHECK(t.data()[(c * 12 + y) * 12 + x] ==
                      doctest::Approx(img.at(x, y, c) / 255.0f).epsilon(1e-6));
}

TEST_CASE("upscaled checkerboard matches the reference bilinear oracle") {
    ImageU8 img;
    img.width = img.height = 8;
    img.rgb.resize(8 * 8 * 3);
    std::vector<double> gray(8 * 8);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
            std::uint8_t v = ((x / 4 + y / 4) % 2 == 0) ? 255 : 0;
            gray[y * 8 + x] = v / 255.0;
            for (int c = 0; c < 3; ++c) img.rgb[(y * 8 + x) * 3 + c] = v;
        }
    Tensor<float> t = preprocess_rgb(img, 16);
    for (std::size_t oy = 0; oy < 16; ++oy)
        for (std::size_t ox = 0; ox < 16; ++ox) {
            double expect = oracle_bilinear(gray, 8, 8, 16, 16, oy, ox);
            CHECK(t.data()[oy * 16 + ox] == doctest::Approx(expect).epsilon(1e-5));
        }
}

TEST_CASE("channel normalization applies after scaling") {
    ImageU8 img;
    img.width = img.height = 8;
    img.rgb.assign(8 * 8 * 3, 255);
    ChannelNorm norm;
    norm.mean = {0.5, 0.5, 0.5};
    norm.stddev = {0.25, 0.25, 0.25};
    Tensor<float> t = preprocess_rgb(img, 8, norm);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("too-small rgb input raises an input error") {
    ImageU8 img;
    img.width = 4;
    img.height = 4;
    img.rgb.assign(4 * 4 * 3, 0);
    CHECK_THROWS_AS(preprocess_rgb(img, 8), Error);
}

TEST_CASE("raster tensors replicate three identical channels in [0,1]") {
    BnwRaster black;
    black.width = black.height = 16;
    black.pixels.assign(256, 0);
    Tensor<float> tb = raster_to_tensor(black, 16);
    for (std::size_t i = 0; i < tb.size(); ++i) CHECK(tb[i] == 0.0f);

    BnwRaster white = black;
    white.pixels.assign(256, 1);
    Tensor<float> tw = raster_to_tensor(white, 16);
    for (std::size_t i = 0; i < tw.size(); ++i) CHECK(tw[i] == 1.0f);

    Rng rng(3);
    BnwRaster mixed = black;
    for (auto& p : mixed.pixels) p = rng.below(2) ? 1 : 0;
    Tensor<float> tm = raster_to_tensor(mixed, 8);
    const std::size_t plane = 8 * 8;
    for (std::size_t i = 0; i < plane; ++i) {
        CHECK(tm[i] == tm[plane + i]);
        CHECK(tm[i] == tm[2 * plane + i]);
        CHECK(tm[i] >= 0.0f);
        CHECK(tm[i] <= 1.0f);
    }
}

TEST_CASE("ppm io round-trips") {
    auto dir = temp_dir();
    Rng rng(21);
    ImageU8 img;
    img.width = 10;
    img.height = 9;
    img.rgb.resize(10 * 9 * 3);
    for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng.below(256));
    write_ppm(dir / "img.ppm", img);
    ImageU8 loaded = read_ppm(dir / "img.ppm");
    CHECK(loaded.width == img.width);
    CHECK(loaded.height == img.height);
    CHECK(loaded.rgb == img.rgb);
}
