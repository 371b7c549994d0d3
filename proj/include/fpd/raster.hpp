#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpd/landmarks.hpp"

namespace fpd {

// One polyline over landmark indices; closed groups connect last -> first.
struct ContourGroup {
    std::string name;
    bool closed = false;
    std::vector<std::size_t> indices;
};

struct ContourSpec {
    std::vector<ContourGroup> groups;
};

// Binary raster, row-major, 0 = black background, 1 = white stroke.
struct BnwRaster {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    void set(std::size_t x, std::size_t y) { pixels[y * width + x] = 1; }
    std::size_t count_set() const;
};

// Integer Bresenham between two pixels, inclusive of both endpoints.
// Every plotted pixel advances the major axis by one step, so a segment
// covers exactly max(|dx|,|dy|)+1 pixels and forms an 8-connected path.
void bresenham_line(int x0, int y0, int x1, int y1, std::vector<std::pair<int, int>>& out);

// White 1-px polylines on a black canvas. Landmark (x,y) maps to pixel
// (round(x*(width-1)), round(y*(height-1))).
BnwRaster rasterize_contours(const LandmarkSet& lm, const ContourSpec& spec, std::size_t width,
                             std::size_t height);

// Contour spec config file: {"groups":[{"name","closed","indices"}...]}
ContourSpec load_contour_spec(const std::filesystem::path& path);
void save_contour_spec(const std::filesystem::path& path, const ContourSpec& spec);

// Face silhouette, eyebrows, and eyes of the 478-point estimator topology;
// identical to configs/contours_default.json.
const ContourSpec& default_contour_spec();

}  // namespace fpd
