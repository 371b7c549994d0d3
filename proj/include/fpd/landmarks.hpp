#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "fpd/tensor.hpp"

namespace fpd {

inline constexpr std::size_t kLandmarkCount = 478;
inline constexpr std::size_t kSubsetSize = 125;
inline constexpr std::size_t kBlendshapeCount = 52;

struct LandmarkPoint {
    double x = 0.0, y = 0.0, z = 0.0;
};

// 478 estimator landmarks, x/y normalized to [0,1] relative to the image,
// z a relative depth.
struct LandmarkSet {
    std::array<LandmarkPoint, kLandmarkCount> points;
};

// The 125 selected (x,y) rows, in subset-index order.
struct CoordinateMatrix {
    std::array<std::array<double, 2>, kSubsetSize> coords;

    Tensor<float> to_tensor() const;  // shape 125x2
};

struct BlendshapeVector {
    std::array<double, kBlendshapeCount> values;

    Tensor<float> to_tensor() const;  // shape 52
};

// Row r of the result is (x, y) of landmark indices[r]; z is dropped.
CoordinateMatrix select_landmark_subset(const LandmarkSet& lm,
                                        const std::vector<std::size_t>& indices);

// Plain-text formats: landmarks are 478 "x,y,z" lines, blendshapes 52
// "name,value" lines, the subset config 125 lines of one index each.
LandmarkSet load_landmarks(const std::filesystem::path& path);
BlendshapeVector load_blendshapes(const std::filesystem::path& path);
std::vector<std::size_t> load_subset_indices(const std::filesystem::path& path);

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& lm);
void save_blendshapes(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, double>>& named);

// Built-in subset covering the estimator's eye, nose, and mouth groups;
// identical to configs/landmark_subset_default.txt.
const std::vector<std::size_t>& default_subset_indices();

}  // namespace fpd
