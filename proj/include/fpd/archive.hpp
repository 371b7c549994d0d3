#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fpd {

// One entry of the flat named-tensor container. On disk, per entry:
//   u32 LE name length, UTF-8 name bytes, u32 LE rank,
//   u64 LE per dimension, payload as f32 LE (row-major).
// Entries are concatenated with no global header.
struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : dims) n *= static_cast<std::size_t>(d);
        return dims.empty() ? 0 : n;
    }
};

void write_archive(const std::filesystem::path& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> read_archive(const std::filesystem::path& path);

}  // namespace fpd
