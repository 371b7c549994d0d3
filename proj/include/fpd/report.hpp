#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fpd/metrics.hpp"

namespace fpd {

struct ReportRow {
    std::string modality;
    std::string model;
    double avg_f1 = 0.0;
    double avg_precision = 0.0;
    double avg_recall = 0.0;
};

// "66.67"-style fixed formatting, two decimals, half away from zero.
std::string format_metric(double v);

// CSV with header modality,model,avg_f1,avg_precision,avg_recall and values
// at 2 decimals.
void emit_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_report(const std::filesystem::path& path);

// Per-fold detail CSV: patient id, raw counts, metrics, degenerate flags.
void emit_fold_details(const std::filesystem::path& path, const std::vector<FoldMetrics>& folds);

// Concatenates run reports into one comparison table; duplicate
// (modality, model) keys are rejected.
std::vector<ReportRow> merge_reports(const std::vector<std::filesystem::path>& paths);

}  // namespace fpd
