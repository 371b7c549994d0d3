#include "fpd/cache.hpp"

#include "fpd/archive.hpp"
#include "fpd/error.hpp"

namespace fpd {

namespace {

NamedTensor to_entry(const std::string& name, const Tensor<float>& t) {
    NamedTensor e;
    e.name = name;
    e.dims.assign(t.shape().begin(), t.shape().end());
    e.data.assign(t.data(), t.data() + t.size());
    return e;
}

Tensor<float> single_tensor(const std::filesystem::path& path, const std::string& name) {
    auto entries = read_archive(path);
    for (auto& e : entries)
        if (e.name == name) {
            std::vector<std::size_t> shape(e.dims.begin(), e.dims.end());
            return Tensor<float>(shape, std::vector<float>(e.data.begin(), e.data.end()));
        }
    raise(ErrorCategory::Parse, "cache entry " + path.string() + " missing tensor '" + name + "'");
}

}  // namespace

std::filesystem::path ModalityCache::entry(const FrameRecord& f, const char* kind) const {
    return root_ / f.patient_id / f.video_id /
           (std::to_string(f.frame_index) + "." + kind + ".nt");
}

bool ModalityCache::fresh(const FrameRecord& f) const {
    namespace fs = std::filesystem;
    const fs::path entries[3] = {coords_path(f), blend_path(f), bnw_path(f)};
    fs::file_time_type newest_source = fs::file_time_type::min();
    for (const fs::path& src : {f.landmark_path, f.blendshape_path})
        newest_source = std::max(newest_source, fs::last_write_time(src));
    for (const fs::path& e : entries) {
        if (!fs::exists(e)) return false;
        if (fs::last_write_time(e) < newest_source) return false;
    }
    return true;
}

void ModalityCache::write_frame(const FrameRecord& f, const std::vector<std::size_t>& subset,
                                const ContourSpec& contours) const {
    LandmarkSet lm = load_landmarks(f.landmark_path);
    BlendshapeVector bs = load_blendshapes(f.blendshape_path);

    CoordinateMatrix coords = select_landmark_subset(lm, subset);
    write_archive(coords_path(f), {to_entry("coords", coords.to_tensor())});
    write_archive(blend_path(f), {to_entry("blend", bs.to_tensor())});

    BnwRaster raster = rasterize_contours(lm, contours, raster_size_, raster_size_);
    Tensor<float> grid({raster.height, raster.width});
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = static_cast<float>(raster.pixels[i]);
    write_archive(bnw_path(f), {to_entry("bnw", grid)});
}

Tensor<float> ModalityCache::read_coords(const FrameRecord& f) const {
    return single_tensor(coords_path(f), "coords");
}

Tensor<float> ModalityCache::read_blend(const FrameRecord& f) const {
    return single_tensor(blend_path(f), "blend");
}

BnwRaster ModalityCache::read_bnw(const FrameRecord& f) const {
    Tensor<float> grid = single_tensor(bnw_path(f), "bnw");
    BnwRaster r;
    r.height = grid.dim(0);
    r.width = grid.dim(1);
    r.pixels.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        r.pixels[i] = grid[i] > 0.5f ? 1 : 0;
    return r;
}

PreprocessStats preprocess_frames(const Manifest& m, const ModalityCache& cache,
                                  const std::vector<std::size_t>& subset,
                                  const ContourSpec& contours) {
    PreprocessStats stats;
    for (const FrameRecord* f : m.all_frames()) {
        if (cache.fresh(*f)) {
            ++stats.skipped;
            continue;
        }
        try {
            cache.write_frame(*f, subset, contours);
        } catch (const Error& e) {
            raise(e.category(), "frame " + f->key() + ": " + e.what());
        }
        ++stats.written;
    }
    return stats;
}

}  // namespace fpd
