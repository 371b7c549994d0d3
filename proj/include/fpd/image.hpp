#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "fpd/raster.hpp"
#include "fpd/tensor.hpp"

namespace fpd {

// Interleaved 8-bit RGB, row-major.
struct ImageU8 {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel

    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
        return rgb[(y * width + x) * 3 + c];
    }
};

// Optional per-channel standardization applied after the 1/255 scaling.
struct ChannelNorm {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

// Binary PPM (P6, maxval 255). Frames are expected in this format.
ImageU8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImageU8& img);

// Bilinear resize with half-pixel sample centers: a source coordinate is
// (dst+0.5)*src/dst-0.5, clamped. Resizing to the source size is an identity.
Tensor<float> bilinear_resize(const Tensor<float>& chw, std::size_t out_h, std::size_t out_w);

// HxWx3 bytes -> 3xSxS floats: resize, channel-first, scale by 1/255,
// then optional mean/std normalization.
Tensor<float> preprocess_rgb(const ImageU8& img, std::size_t target_side,
                             const std::optional<ChannelNorm>& norm = std::nullopt);

// Replicates the binary grid to 3 identical channels and resizes like
// preprocess_rgb; values stay in [0,1].
Tensor<float> raster_to_tensor(const BnwRaster& raster, std::size_t target_side);

}  // namespace fpd
