#include "fpd/raster.hpp"

#include <cmath>
#include <fstream>

#include "fpd/error.hpp"
#include "json.hpp"

namespace fpd {

std::size_t BnwRaster::count_set() const {
    std::size_t n = 0;
    for (auto p : pixels) n += p;
    return n;
}

void bresenham_line(int x0, int y0, int x1, int y1, std::vector<std::pair<int, int>>& out) {
    int dx = std::abs(x1 - x0);
    int dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1;
    int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    for (;;) {
        out.emplace_back(x, y);
        if (x == x1 && y == y1) break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

BnwRaster rasterize_contours(const LandmarkSet& lm, const ContourSpec& spec, std::size_t width,
                             std::size_t height) {
    if (width < 8 || height < 8)
        raise(ErrorCategory::Param, "raster canvas must be at least 8x8, got " +
                                        std::to_string(width) + "x" + std::to_string(height));
    BnwRaster r;
    r.width = width;
    r.height = height;
    r.pixels.assign(width * height, 0);

    auto to_pixel = [&](std::size_t idx) -> std::pair<int, int> {
        const LandmarkPoint& p = lm.points[idx];
        int px = static_cast<int>(std::lround(p.x * static_cast<double>(width - 1)));
        int py = static_cast<int>(std::lround(p.y * static_cast<double>(height - 1)));
        return {px, py};
    };

    std::vector<std::pair<int, int>> segment;
    for (const ContourGroup& g : spec.groups) {
        if (g.indices.size() < 2)
            raise(ErrorCategory::Spec,
                  "contour group '" + g.name + "' needs at least 2 indices");
        for (std::size_t idx : g.indices)
            if (idx >= kLandmarkCount)
                raise(ErrorCategory::Spec, "contour group '" + g.name + "' index " +
                                               std::to_string(idx) + " out of range");
        const std::size_t n = g.indices.size();
        const std::size_t segments = g.closed ? n : n - 1;
        for (std::size_t s = 0; s < segments; ++s) {
            auto [x0, y0] = to_pixel(g.indices[s]);
            auto [x1, y1] = to_pixel(g.indices[(s + 1) % n]);
            segment.clear();
            bresenham_line(x0, y0, x1, y1, segment);
            for (auto [x, y] : segment)
                r.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
        }
    }
    return r;
}

ContourSpec load_contour_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCategory::Io, "cannot open contour spec " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Parse, "contour spec " + path.string() + ": " + e.what());
    }
    ContourSpec spec;
    try {
        for (const auto& jg : j.at("groups")) {
            ContourGroup g;
            g.name = jg.at("name").get<std::string>();
            g.closed = jg.at("closed").get<bool>();
            g.indices = jg.at("indices").get<std::vector<std::size_t>>();
            spec.groups.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Parse, "contour spec " + path.string() + ": " + e.what());
    }
    return spec;
}

void save_contour_spec(const std::filesystem::path& path, const ContourSpec& spec) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : spec.groups)
        groups.push_back({{"name", g.name}, {"closed", g.closed}, {"indices", g.indices}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write contour spec " + path.string());
    out << nlohmann::json{{"groups", groups}}.dump(2) << "\n";
}

const ContourSpec& default_contour_spec() {
    static const ContourSpec spec = [] {
        ContourSpec s;
        s.groups.push_back(
            {"face_silhouette",
             true,
             {10,  338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288,
              397, 365, 379, 378, 400, 377, 152, 148, 176, 149, 150, 136,
              172, 58,  132, 93,  234, 127, 162, 21,  54,  103, 67,  109}});
        s.groups.push_back({"left_eye",
                            true,
                            {263, 249, 390, 373, 374, 380, 381, 382, 362, 398, 384, 385, 386, 387,
                             388, 466}});
        s.groups.push_back({"right_eye",
                            true,
                            {33, 7, 163, 144, 145, 153, 154, 155, 133, 173, 157, 158, 159, 160,
                             161, 246}});
        s.groups.push_back({"left_eyebrow_lower", false, {276, 283, 282, 295, 285}});
        s.groups.push_back({"left_eyebrow_upper", false, {300, 293, 334, 296, 336}});
        s.groups.push_back({"right_eyebrow_lower", false, {46, 53, 52, 65, 55}});
        s.groups.push_back({"right_eyebrow_upper", false, {70, 63, 105, 66, 107}});
        return s;
    }();
    return spec;
}

}  // namespace fpd
