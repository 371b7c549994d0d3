#pragma once

#include <filesystem>
#include <system_error>

#include "fpd/error.hpp"

namespace fpd {

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        raise(ErrorCategory::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

inline void ensure_parent_dir(const std::filesystem::path& p) {
    if (!p.parent_path().empty()) ensure_dir(p.parent_path());
}

}  // namespace fpd
