#include "synthetic.hpp"

#include <fstream>

#include "fpd/image.hpp"
#include "fpd/landmarks.hpp"
#include "fpd/rng.hpp"
#include "json.hpp"

namespace fpd::testsupport {

namespace {

double clamp01(double v) { return std::min(std::max(v, 0.0), 1.0); }

// Positive frames carry a bright upper-left block, negative ones a
// lower-right block, so the image modalities separate the classes too.
fpd::ImageU8 render_frame(std::size_t side, bool positive, fpd::Rng& rng) {
    fpd::ImageU8 img;
    img.width = img.height = side;
    img.rgb.assign(side * side * 3, 0);
    for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
            bool in_block = positive ? (x < side / 2 && y < side / 2)
                                     : (x >= side / 2 && y >= side / 2);
            std::uint8_t base = in_block ? 200 : 30;
            for (int c = 0; c < 3; ++c)
                img.rgb[(y * side + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::min(255.0, base + rng.uniform(0.0, 20.0)));
        }
    return img;
}

fpd::LandmarkSet make_landmarks(bool positive, fpd::Rng& rng) {
    fpd::LandmarkSet lm;
    const double shift = positive ? 0.06 : -0.06;
    for (std::size_t i = 0; i < fpd::kLandmarkCount; ++i) {
        double cx = 0.5 + 0.3 * std::cos(static_cast<double>(i));
        double cy = 0.5 + 0.3 * std::sin(static_cast<double>(i) * 0.7);
        lm.points[i].x = clamp01(cx + shift + rng.uniform(-0.01, 0.01));
        lm.points[i].y = clamp01(cy - shift + rng.uniform(-0.01, 0.01));
        lm.points[i].z = rng.uniform(-0.05, 0.05);
    }
    return lm;
}

std::vector<std::pair<std::string, double>> make_blendshapes(bool positive, fpd::Rng& rng) {
    std::vector<std::pair<std::string, double>> bs;
    const double mean = positive ? 0.7 : 0.3;
    for (std::size_t i = 0; i < fpd::kBlendshapeCount; ++i)
        bs.emplace_back("shape" + std::to_string(i), clamp01(mean + rng.uniform(-0.1, 0.1)));
    return bs;
}

}  // namespace

std::filesystem::path write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec) {
    std::filesystem::create_directories(dir);
    fpd::Rng rng(spec.seed);
    nlohmann::json patients = nlohmann::json::array();

    for (std::size_t p = 0; p < spec.patients; ++p) {
        const std::string pid = "patient" + std::to_string(p + 1);
        nlohmann::json videos = nlohmann::json::array();
        const std::size_t video_count =
            (spec.second_video_for_even_patients && p % 2 == 0) ? 2 : 1;
        for (std::size_t v = 0; v < video_count; ++v) {
            const std::string vid = "video" + std::to_string(v + 1);
            nlohmann::json frames = nlohmann::json::array();
            for (std::size_t f = 0; f < spec.frames_per_video; ++f) {
                const bool positive = (f % 2 == 0);
                const std::string stem = pid + "_" + vid + "_f" + std::to_string(f);

                fpd::write_ppm(dir / (stem + ".ppm"),
                               render_frame(spec.image_side, positive, rng));
                fpd::save_landmarks(dir / (stem + ".lm.txt"), make_landmarks(positive, rng));
                fpd::save_blendshapes(dir / (stem + ".bs.txt"), make_blendshapes(positive, rng));

                const char* eye;
                const char* mouth;
                if (positive) {
                    // alternate the two positive label patterns
                    eye = (f % 4 == 0) ? "strong" : "slight";
                    mouth = (f % 4 == 0) ? "none" : "slight";
                } else {
                    eye = (f % 4 == 1) ? "slight" : "none";
                    mouth = "none";
                }
                frames.push_back({{"index", f},
                                  {"rgb", stem + ".ppm"},
                                  {"landmarks", stem + ".lm.txt"},
                                  {"blendshapes", stem + ".bs.txt"},
                                  {"eye", eye},
                                  {"mouth", mouth}});
            }
            videos.push_back({{"video_id", vid}, {"fps", 6.0}, {"frames", frames}});
        }
        patients.push_back({{"patient_id", pid}, {"videos", videos}});
    }

    auto manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::trunc);
    out << nlohmann::json{{"patients", patients}}.dump(2) << "\n";
    return manifest_path;
}

std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("fpd_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fpd::testsupport
