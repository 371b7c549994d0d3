#pragma once

#include <filesystem>
#include <string>

#include "fpd/landmarks.hpp"
#include "fpd/manifest.hpp"
#include "fpd/raster.hpp"
#include "fpd/runconfig.hpp"
#include "fpd/tensor.hpp"

namespace fpd {

// One named-tensor archive per frame per derived modality, keyed by
// (patient, video, frame) under the cache root:
//   <cache>/<patient>/<video>/<frame>.{coords,blend,bnw}.nt
class ModalityCache {
public:
    ModalityCache(std::filesystem::path root, std::size_t raster_size)
        : root_(std::move(root)), raster_size_(raster_size) {}

    std::filesystem::path coords_path(const FrameRecord& f) const { return entry(f, "coords"); }
    std::filesystem::path blend_path(const FrameRecord& f) const { return entry(f, "blend"); }
    std::filesystem::path bnw_path(const FrameRecord& f) const { return entry(f, "bnw"); }

    // True when every cache entry exists and is no older than its sources.
    bool fresh(const FrameRecord& f) const;

    // Derives and writes the three entries for one frame.
    void write_frame(const FrameRecord& f, const std::vector<std::size_t>& subset,
                     const ContourSpec& contours) const;

    Tensor<float> read_coords(const FrameRecord& f) const;  // 125x2
    Tensor<float> read_blend(const FrameRecord& f) const;   // 52
    BnwRaster read_bnw(const FrameRecord& f) const;

    const std::filesystem::path& root() const { return root_; }
    std::size_t raster_size() const { return raster_size_; }

private:
    std::filesystem::path entry(const FrameRecord& f, const char* kind) const;

    std::filesystem::path root_;
    std::size_t raster_size_;
};

struct PreprocessStats {
    std::size_t written = 0;
    std::size_t skipped = 0;
};

// Populates the cache for every frame in the manifest; up-to-date entries
// are left untouched.
PreprocessStats preprocess_frames(const Manifest& m, const ModalityCache& cache,
                                  const std::vector<std::size_t>& subset,
                                  const ContourSpec& contours);

}  // namespace fpd
