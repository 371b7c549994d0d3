#include "fpd/report.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fpd/error.hpp"
#include "fpd/fsutil.hpp"

namespace fpd {

namespace {

constexpr const char* kHeader = "modality,model,avg_f1,avg_precision,avg_recall";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

std::string format_metric(double v) {
    // round half up in cents, then print the integer parts; avoids the
    // half-to-even behaviour of printf on exact ties
    const bool neg = v < 0.0;
    const long cents = static_cast<long>(std::floor(std::abs(v) * 100.0 + 0.5));
    std::ostringstream os;
    if (neg && cents != 0) os << '-';
    os << cents / 100 << '.';
    const long frac = cents % 100;
    os << static_cast<char>('0' + frac / 10) << static_cast<char>('0' + frac % 10);
    return os.str();
}

void emit_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write report " + path.string());
    out << kHeader << "\n";
    for (const ReportRow& r : rows)
        out << r.modality << "," << r.model << "," << format_metric(r.avg_f1) << ","
            << format_metric(r.avg_precision) << "," << format_metric(r.avg_recall) << "\n";
    if (!out) raise(ErrorCategory::Io, "short write on report " + path.string());
}

std::vector<ReportRow> parse_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCategory::Io, "cannot open report " + path.string());
    std::string line;
    std::size_t lineno = 0;
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != kHeader)
                raise(ErrorCategory::Parse, path.string() + ":1: bad header '" + line +
                                                "', expected '" + kHeader + "'");
            continue;
        }
        auto fields = split_csv(line);
        if (fields.size() != 5)
            raise(ErrorCategory::Parse, path.string() + ":" + std::to_string(lineno) +
                                            ": expected 5 fields, got " +
                                            std::to_string(fields.size()));
        ReportRow r;
        r.modality = fields[0];
        r.model = fields[1];
        try {
            r.avg_f1 = std::stod(fields[2]);
            r.avg_precision = std::stod(fields[3]);
            r.avg_recall = std::stod(fields[4]);
        } catch (const std::exception&) {
            raise(ErrorCategory::Parse, path.string() + ":" + std::to_string(lineno) +
                                            ": non-numeric metric field");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_fold_details(const std::filesystem::path& path, const std::vector<FoldMetrics>& folds) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCategory::Io, "cannot write fold details " + path.string());
    out << "patient_id,tp,fp,tn,fn,precision,recall,f1,"
           "degenerate_precision,degenerate_recall,degenerate_f1\n";
    for (const FoldMetrics& f : folds)
        out << f.patient_id << "," << f.counts.tp << "," << f.counts.fp << "," << f.counts.tn
            << "," << f.counts.fn << "," << format_metric(f.metrics.precision) << ","
            << format_metric(f.metrics.recall) << "," << format_metric(f.metrics.f1) << ","
            << (f.metrics.degenerate_precision ? 1 : 0) << ","
            << (f.metrics.degenerate_recall ? 1 : 0) << "," << (f.metrics.degenerate_f1 ? 1 : 0)
            << "\n";
}

std::vector<ReportRow> merge_reports(const std::vector<std::filesystem::path>& paths) {
    if (paths.empty()) raise(ErrorCategory::Usage, "no report files given");
    std::vector<ReportRow> merged;
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& p : paths)
        for (ReportRow& r : parse_report(p)) {
            if (!keys.insert({r.modality, r.model}).second)
                raise(ErrorCategory::Ingest,
                      "duplicate report row (" + r.modality + ", " + r.model + ") in " +
                          p.string());
            merged.push_back(std::move(r));
        }
    return merged;
}

}  // namespace fpd
