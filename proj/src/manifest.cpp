#include "fpd/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "fpd/error.hpp"
#include "json.hpp"

namespace fpd {

RegionIntensity parse_intensity(const std::string& token) {
    std::string lower(token.size(), '\0');
    std::transform(token.begin(), token.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "none") return RegionIntensity::Absent;
    if (lower == "slight") return RegionIntensity::Slight;
    if (lower == "strong") return RegionIntensity::Strong;
    raise(ErrorCategory::Ingest,
          "unknown intensity token '" + token + "' (valid: none, slight, strong)");
}

const char* intensity_token(RegionIntensity v) {
    switch (v) {
        case RegionIntensity::Absent: return "none";
        case RegionIntensity::Slight: return "slight";
        case RegionIntensity::Strong: return "strong";
    }
    return "none";
}

bool derive_binary_label(RegionIntensity eye, RegionIntensity mouth) {
    if (eye == RegionIntensity::Strong || mouth == RegionIntensity::Strong) return true;
    return eye == RegionIntensity::Slight && mouth == RegionIntensity::Slight;
}

std::size_t Manifest::frame_count() const {
    std::size_t n = 0;
    for (const auto& p : patients)
        for (const auto& v : p.videos) n += v.frames.size();
    return n;
}

std::vector<const FrameRecord*> Manifest::all_frames() const {
    std::vector<const FrameRecord*> out;
    for (const auto& p : patients)
        for (const auto& v : p.videos)
            for (const auto& f : v.frames) out.push_back(&f);
    return out;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : root / p;
}

void check_exists(const std::filesystem::path& p, const std::string& frame_key,
                  const char* role) {
    if (!std::filesystem::exists(p))
        raise(ErrorCategory::Ingest, "frame " + frame_key + ": missing " + role + " file " +
                                         p.string());
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path, bool check_files) {
    std::ifstream in(path);
    if (!in) raise(ErrorCategory::Io, "cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Parse, "manifest " + path.string() + ": " + e.what());
    }

    Manifest m;
    m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    std::set<std::string> frame_keys;
    std::set<std::string> patient_ids;
    try {
        for (const auto& jp : j.at("patients")) {
            PatientEntry patient;
            patient.patient_id = jp.at("patient_id").get<std::string>();
            if (patient.patient_id.empty())
                raise(ErrorCategory::Ingest, "empty patient_id in manifest");
            if (!patient_ids.insert(patient.patient_id).second)
                raise(ErrorCategory::Ingest, "duplicate patient_id '" + patient.patient_id + "'");
            for (const auto& jv : jp.at("videos")) {
                VideoEntry video;
                video.video_id = jv.at("video_id").get<std::string>();
                video.fps = jv.value("fps", 6.0);
                long last_index = -1;
                for (const auto& jf : jv.at("frames")) {
                    FrameRecord f;
                    f.patient_id = patient.patient_id;
                    f.video_id = video.video_id;
                    f.frame_index = jf.at("index").get<std::size_t>();
                    f.rgb_path = resolve(m.root, jf.at("rgb").get<std::string>());
                    f.landmark_path = resolve(m.root, jf.at("landmarks").get<std::string>());
                    f.blendshape_path = resolve(m.root, jf.at("blendshapes").get<std::string>());
                    f.eye = parse_intensity(jf.at("eye").get<std::string>());
                    f.mouth = parse_intensity(jf.at("mouth").get<std::string>());

                    if (!frame_keys.insert(f.key()).second)
                        raise(ErrorCategory::Ingest,
                              "duplicate frame key (" + f.patient_id + ", " + f.video_id + ", " +
                                  std::to_string(f.frame_index) + ")");
                    if (static_cast<long>(f.frame_index) <= last_index)
                        raise(ErrorCategory::Ingest,
                              "frame indices not strictly increasing at " + f.key());
                    last_index = static_cast<long>(f.frame_index);

                    if (check_files) {
                        check_exists(f.rgb_path, f.key(), "rgb");
                        check_exists(f.landmark_path, f.key(), "landmark");
                        check_exists(f.blendshape_path, f.key(), "blendshape");
                    }
                    video.frames.push_back(std::move(f));
                }
                patient.videos.push_back(std::move(video));
            }
            std::size_t patient_frames = 0;
            for (const auto& v : patient.videos) patient_frames += v.frames.size();
            if (patient_frames == 0)
                raise(ErrorCategory::Ingest,
                      "patient '" + patient.patient_id + "' has no frames");
            m.patients.push_back(std::move(patient));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCategory::Parse, "manifest " + path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace fpd
