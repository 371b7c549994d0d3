#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpd/image.hpp"
#include "fpd/presets.hpp"
#include "fpd/train.hpp"

namespace fpd {

enum class Modality { Coords, Blendshapes, Rgb, Bnw, BnwRgb, EarlyFusion, LateFusion };

Modality parse_modality(const std::string& token);
const char* modality_token(Modality m);

// Report row labels per modality: fusion rows carry both constituent
// modalities.
std::string report_modality_label(Modality m);
std::string report_model_label(Modality m);

struct RunConfig {
    std::filesystem::path manifest;
    Modality modality = Modality::Blendshapes;

    // empty -> built-in defaults
    std::filesystem::path subset_indices;
    std::filesystem::path contour_spec;

    std::filesystem::path cache_dir = "cache";
    std::filesystem::path out_dir = "out";
    std::size_t workers = 1;
    std::uint64_t seed_base = 1;

    std::size_t image_size = 224;   // CNN input side (must be even)
    std::size_t raster_size = 224;  // BnW canvas, drawn directly at this size
    std::optional<ChannelNorm> rgb_norm;  // per-channel mean/std after 1/255

    BackboneConfig backbone = BackboneConfig::desk();
    std::vector<std::size_t> fusion_head_sizes{256, 128, 64, 2};
    std::string tap_a = "embedding";  // BnW CNN tap
    std::string tap_b = "hidden3";    // blendshape FNN tap
    bool fine_tune = false;           // early fusion: also update the unimodal models

    std::optional<std::string> exclude_patient;  // train-split selection for `train`

    // raw hyper overrides; resolve against the per-modality defaults
    std::optional<double> lr;
    std::optional<std::size_t> epochs;
    std::size_t batch_size = 32;

    Hyper resolve_hyper(Modality m, std::uint64_t seed) const;
};

// FNN-family learning rate 0.01, CNN-family 0.001; 15 epochs everywhere
// except the dual-image CNN's 8.
double default_lr(Modality m);
std::size_t default_epochs(Modality m);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fpd
