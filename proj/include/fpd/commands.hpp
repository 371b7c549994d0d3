#pragma once

#include <filesystem>
#include <vector>

#include "fpd/report.hpp"
#include "fpd/runconfig.hpp"

namespace fpd {

// The four CLI entry points, usable as library calls. Each throws fpd::Error
// on failure; the binary maps that to a single machine-parsable line.

struct PreprocessResult {
    std::size_t written = 0;
    std::size_t skipped = 0;
};

PreprocessResult cmd_preprocess(const RunConfig& cfg);

struct TrainResult {
    std::vector<std::filesystem::path> weight_files;
    std::vector<std::filesystem::path> history_files;
};

TrainResult cmd_train(const RunConfig& cfg);

struct EvalResult {
    ReportRow row;
    std::vector<FoldMetrics> folds;
    std::filesystem::path report_path;
    std::filesystem::path details_path;
};

EvalResult cmd_eval_lopo(const RunConfig& cfg);

std::vector<ReportRow> cmd_report(const std::vector<std::filesystem::path>& report_files,
                                  const std::filesystem::path& out_path);

}  // namespace fpd
