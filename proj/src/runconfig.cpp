#include "fpd/runconfig.hpp"

#include <fstream>

#include "fpd/error.hpp"
#include "json.hpp"

namespace fpd {

Modality parse_modality(const std::string& token) {
    if (token == "coords") return Modality::Coords;
    if (token == "blendshapes") return Modality::Blendshapes;
    if (token == "rgb") return Modality::Rgb;
    if (token == "bnw") return Modality::Bnw;
    if (token == "bnw+rgb") return Modality::BnwRgb;
    if (token == "early_fusion") return Modality::EarlyFusion;
    if (token == "late_fusion") return Modality::LateFusion;
    raise(ErrorCategory::Usage,
          "unknown modality '" + token +
              "' (valid: coords, blendshapes, rgb, bnw, bnw+rgb, early_fusion, late_fusion)");
}

const char* modality_token(Modality m) {
    switch (m) {
        case Modality::Coords: return "coords";
        case Modality::Blendshapes: return "blendshapes";
        case Modality::Rgb: return "rgb";
        case Modality::Bnw: return "bnw";
        case Modality::BnwRgb: return "bnw+rgb";
        case Modality::EarlyFusion: return "early_fusion";
        case Modality::LateFusion: return "late_fusion";
    }
    return "";
}

std::string report_modality_label(Modality m) {
    switch (m) {
        case Modality::EarlyFusion:
        case Modality::LateFusion: return "blendshapes+bnw";
        default: return modality_token(m);
    }
}

std::string report_model_label(Modality m) {
    switch (m) {
        case Modality::Coords:
        case Modality::Blendshapes: return "fnn";
        case Modality::Rgb:
        case Modality::Bnw:
        case Modality::BnwRgb: return "resnet";
        case Modality::EarlyFusion: return "early_fusion(resnet+fnn)";
        case Modality::LateFusion: return "late_fusion(resnet+fnn)";
    }
    return "";
}

double default_lr(Modality m) {
    switch (m) {
        case Modality::Coords:
        case Modality::Blendshapes:
        case Modality::EarlyFusion: return 0.01;
        default: return 0.001;
    }
}

std::size_t default_epochs(Modality m) { return m == Modality::BnwRgb ? 8 : 15; }

Hyper RunConfig::resolve_hyper(Modality m, std::uint64_t seed) const {
    Hyper hp;
    hp.lr = lr.value_or(default_lr(m));
    hp.epochs = epochs.value_or(default_epochs(m));
    hp.batch_size = batch_size;
    hp.seed = seed;
    return hp;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCategory::Io, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Parse, "config " + path.string() + ": " + e.what());
    }

    RunConfig cfg;
    const auto root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    auto resolve = [&root](const std::string& rel) {
        std::filesystem::path p(rel);
        return p.is_absolute() ? p : root / p;
    };

    try {
        cfg.manifest = resolve(j.at("manifest").get<std::string>());
        cfg.modality = parse_modality(j.at("modality").get<std::string>());
        if (j.contains("subset_indices"))
            cfg.subset_indices = resolve(j["subset_indices"].get<std::string>());
        if (j.contains("contour_spec"))
            cfg.contour_spec = resolve(j["contour_spec"].get<std::string>());
        if (j.contains("cache_dir")) cfg.cache_dir = resolve(j["cache_dir"].get<std::string>());
        if (j.contains("out_dir")) cfg.out_dir = resolve(j["out_dir"].get<std::string>());
        cfg.workers = j.value("workers", std::size_t{1});
        cfg.seed_base = j.value("seed_base", std::uint64_t{1});
        cfg.image_size = j.value("image_size", std::size_t{224});
        cfg.raster_size = j.value("raster_size", std::size_t{224});
        if (j.contains("exclude_patient"))
            cfg.exclude_patient = j["exclude_patient"].get<std::string>();

        if (j.contains("rgb_norm")) {
            const auto& n = j["rgb_norm"];
            ChannelNorm norm;
            auto mean = n.at("mean").get<std::vector<double>>();
            auto stddev = n.at("std").get<std::vector<double>>();
            if (mean.size() != 3 || stddev.size() != 3)
                raise(ErrorCategory::Config, "rgb_norm mean/std need 3 channels");
            for (int c = 0; c < 3; ++c) {
                if (stddev[c] <= 0.0)
                    raise(ErrorCategory::Config, "rgb_norm std must be positive");
                norm.mean[c] = mean[c];
                norm.stddev[c] = stddev[c];
            }
            cfg.rgb_norm = norm;
        }

        if (j.contains("hyper")) {
            const auto& h = j["hyper"];
            if (h.contains("lr")) cfg.lr = h["lr"].get<double>();
            if (h.contains("epochs")) cfg.epochs = h["epochs"].get<std::size_t>();
            cfg.batch_size = h.value("batch_size", std::size_t{32});
        }

        if (j.contains("backbone")) {
            const auto& b = j["backbone"];
            if (b.contains("blocks_per_stage"))
                cfg.backbone.blocks_per_stage =
                    b["blocks_per_stage"].get<std::vector<std::size_t>>();
            cfg.backbone.base_channels = b.value("base_channels", cfg.backbone.base_channels);
            cfg.backbone.bottleneck = b.value("bottleneck", cfg.backbone.bottleneck);
            cfg.backbone.head_hidden = b.value("head_hidden", cfg.backbone.head_hidden);
        }

        if (j.contains("fusion")) {
            const auto& f = j["fusion"];
            if (f.contains("head_sizes"))
                cfg.fusion_head_sizes = f["head_sizes"].get<std::vector<std::size_t>>();
            cfg.tap_a = f.value("tap_a", cfg.tap_a);
            cfg.tap_b = f.value("tap_b", cfg.tap_b);
            cfg.fine_tune = f.value("fine_tune", false);
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Config, "config " + path.string() + ": " + e.what());
    }

    if (cfg.workers < 1) raise(ErrorCategory::Config, "workers must be at least 1");
    if (cfg.image_size < 8 || cfg.image_size % 2 != 0)
        raise(ErrorCategory::Config, "image_size must be even and at least 8");
    if (cfg.raster_size < 8)
        raise(ErrorCategory::Config, "raster_size must be at least 8");
    if (cfg.batch_size < 1) raise(ErrorCategory::Config, "batch_size must be at least 1");
    return cfg;
}

}  // namespace fpd
