#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fpd {

// Total order Absent < Slight < Strong.
enum class RegionIntensity { Absent = 0, Slight = 1, Strong = 2 };

RegionIntensity parse_intensity(const std::string& token);  // {"none","slight","strong"}, any case
const char* intensity_token(RegionIntensity v);

// Palsy is present iff any region shows strong intensity, or both regions
// show slight intensity.
bool derive_binary_label(RegionIntensity eye, RegionIntensity mouth);

struct FrameRecord {
    std::string patient_id;
    std::string video_id;
    std::size_t frame_index = 0;
    std::filesystem::path rgb_path;
    std::filesystem::path landmark_path;
    std::filesystem::path blendshape_path;
    RegionIntensity eye = RegionIntensity::Absent;
    RegionIntensity mouth = RegionIntensity::Absent;

    bool positive() const { return derive_binary_label(eye, mouth); }
    std::string key() const {
        return patient_id + "/" + video_id + "/" + std::to_string(frame_index);
    }
};

struct VideoEntry {
    std::string video_id;
    double fps = 6.0;  // informational
    std::vector<FrameRecord> frames;
};

struct PatientEntry {
    std::string patient_id;
    std::vector<VideoEntry> videos;
};

struct Manifest {
    std::filesystem::path root;  // directory the manifest was loaded from
    std::vector<PatientEntry> patients;

    std::size_t frame_count() const;
    std::vector<const FrameRecord*> all_frames() const;
};

// Parses and fully validates the JSON manifest: schema, unique
// (patient, video, frame) keys, strictly increasing frame indices per video,
// known intensity tokens, and existence of every referenced file. Relative
// paths resolve against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path, bool check_files = true);

}  // namespace fpd
