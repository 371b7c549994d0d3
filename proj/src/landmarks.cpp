#include "fpd/landmarks.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fpd/error.hpp"

namespace fpd {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCategory::Io, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(line);
    }
    return lines;
}

double parse_field(const std::string& tok, const std::filesystem::path& path, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        raise(ErrorCategory::Input, path.string() + ":" + std::to_string(lineno) +
                                        ": expected a decimal field, got '" + tok + "'");
    }
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, delim)) out.push_back(tok);
    return out;
}

}  // namespace

Tensor<float> CoordinateMatrix::to_tensor() const {
    Tensor<float> t({kSubsetSize, 2});
    for (std::size_t r = 0; r < kSubsetSize; ++r) {
        t.at(r, 0) = static_cast<float>(coords[r][0]);
        t.at(r, 1) = static_cast<float>(coords[r][1]);
    }
    return t;
}

Tensor<float> BlendshapeVector::to_tensor() const {
    Tensor<float> t({kBlendshapeCount});
    for (std::size_t i = 0; i < kBlendshapeCount; ++i) t[i] = static_cast<float>(values[i]);
    return t;
}

CoordinateMatrix select_landmark_subset(const LandmarkSet& lm,
                                        const std::vector<std::size_t>& indices) {
    if (indices.size() != kSubsetSize)
        raise(ErrorCategory::Spec, "landmark subset needs exactly " + std::to_string(kSubsetSize) +
                                       " indices, got " + std::to_string(indices.size()));
    std::set<std::size_t> seen;
    for (std::size_t idx : indices) {
        if (idx >= kLandmarkCount)
            raise(ErrorCategory::Spec,
                  "landmark subset index " + std::to_string(idx) + " out of range [0, " +
                      std::to_string(kLandmarkCount) + ")");
        if (!seen.insert(idx).second)
            raise(ErrorCategory::Spec, "duplicate landmark subset index " + std::to_string(idx));
    }
    CoordinateMatrix m;
    for (std::size_t r = 0; r < kSubsetSize; ++r) {
        const LandmarkPoint& p = lm.points[indices[r]];
        m.coords[r] = {p.x, p.y};
    }
    return m;
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.size() != kLandmarkCount)
        raise(ErrorCategory::Input, path.string() + ": expected " +
                                        std::to_string(kLandmarkCount) + " landmark lines, got " +
                                        std::to_string(lines.size()));
    LandmarkSet lm;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto fields = split(lines[i], ',');
        if (fields.size() != 3)
            raise(ErrorCategory::Input, path.string() + ":" + std::to_string(i + 1) +
                                            ": expected 'x,y,z', got '" + lines[i] + "'");
        LandmarkPoint p;
        p.x = parse_field(fields[0], path, i + 1);
        p.y = parse_field(fields[1], path, i + 1);
        p.z = parse_field(fields[2], path, i + 1);
        if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
            raise(ErrorCategory::Input, path.string() + ":" + std::to_string(i + 1) +
                                            ": landmark x,y must lie in [0,1]");
        lm.points[i] = p;
    }
    return lm;
}

BlendshapeVector load_blendshapes(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.size() != kBlendshapeCount)
        raise(ErrorCategory::Input, path.string() + ": expected " +
                                        std::to_string(kBlendshapeCount) +
                                        " blendshape lines, got " + std::to_string(lines.size()));
    BlendshapeVector b;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto fields = split(lines[i], ',');
        if (fields.size() != 2 || fields[0].empty())
            raise(ErrorCategory::Input, path.string() + ":" + std::to_string(i + 1) +
                                            ": expected 'name,value', got '" + lines[i] + "'");
        double v = parse_field(fields[1], path, i + 1);
        // out-of-range values are rejected, never clamped
        if (v < 0.0 || v > 1.0)
            raise(ErrorCategory::Input, path.string() + ":" + std::to_string(i + 1) +
                                            ": blendshape value " + fields[1] +
                                            " outside [0,1]");
        b.values[i] = v;
    }
    return b;
}

std::vector<std::size_t> load_subset_indices(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.size() != kSubsetSize)
        raise(ErrorCategory::Spec, path.string() + ": expected " + std::to_string(kSubsetSize) +
                                       " index lines, got " + std::to_string(lines.size()));
    std::vector<std::size_t> indices;
    indices.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            std::size_t pos = 0;
            long v = std::stol(lines[i], &pos);
            if (pos != lines[i].size() || v < 0) throw std::invalid_argument(lines[i]);
            indices.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            raise(ErrorCategory::Spec, path.string() + ":" + std::to_string(i + 1) +
                                           ": expected one non-negative index, got '" + lines[i] +
                                           "'");
        }
    }
    return indices;
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& lm) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write " + path.string());
    out.precision(9);
    for (const auto& p : lm.points) out << p.x << "," << p.y << "," << p.z << "\n";
}

void save_blendshapes(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, double>>& named) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write " + path.string());
    out.precision(9);
    for (const auto& [name, value] : named) out << name << "," << value << "\n";
}

// Eye rings and irises, the lip ring, and the nose bridge/wing points of the
// 478-landmark estimator topology. The exact selection is configurable; this
// default covers the eye/nose/mouth semantic groups.
const std::vector<std::size_t>& default_subset_indices() {
    static const std::vector<std::size_t> indices = {
        // right eye ring
        33, 7, 163, 144, 145, 153, 154, 155, 133, 173, 157, 158, 159, 160, 161, 246,
        // left eye ring
        263, 249, 390, 373, 374, 380, 381, 382, 362, 398, 384, 385, 386, 387, 388, 466,
        // irises
        468, 469, 470, 471, 472, 473, 474, 475, 476, 477,
        // lips (outer + inner rings)
        61, 146, 91, 181, 84, 17, 314, 405, 321, 375, 291, 308, 324, 318, 402, 317, 14, 87, 178,
        88, 95, 185, 40, 39, 37, 0, 267, 269, 270, 409, 415, 310, 311, 312, 13, 82, 81, 42, 183,
        78,
        // nose bridge, tip, and base
        168, 6, 197, 195, 5, 4, 1, 19, 94, 2, 98, 97, 326, 327, 294, 278, 344, 440, 275, 45, 220,
        115, 48, 219, 218, 237, 44,
        // nose wings and surroundings
        125, 141, 235, 236, 3, 51, 134, 129, 102, 64, 240, 99, 60, 75, 59, 166};
    return indices;
}

}  // namespace fpd
