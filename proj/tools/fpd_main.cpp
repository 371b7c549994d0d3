#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fpd/commands.hpp"
#include "fpd/error.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::size_t workers = 0;   // 0 = keep config value
    std::uint64_t seed = 0;
    bool seed_set = false;
};

fpd::RunConfig resolved_config(const GlobalFlags& flags) {
    if (flags.config_path.empty())
        fpd::raise(fpd::ErrorCategory::Usage, "--config <path> is required");
    fpd::RunConfig cfg = fpd::load_run_config(flags.config_path);
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.workers > 0) cfg.workers = flags.workers;
    if (flags.seed_set) cfg.seed_base = flags.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"facial-palsy detection toolkit"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "run configuration file");
    app.add_option("--out", flags.out_dir, "output directory (overrides config)");
    app.add_option("--workers", flags.workers, "fold worker count (overrides config)");
    auto* seed_opt = app.add_option("--seed", flags.seed, "seed base (overrides config)");

    auto* preprocess = app.add_subcommand("preprocess", "derive and cache the modalities");
    auto* train = app.add_subcommand("train", "train one modality/model on a split");
    auto* eval = app.add_subcommand("eval-lopo", "leave-one-patient-out evaluation");
    auto* report = app.add_subcommand("report", "merge run reports into one table");

    std::vector<std::string> report_files;
    std::string report_out = "comparison.csv";
    report->add_option("files", report_files, "report.csv files to merge")->required();
    report->add_option("--merged", report_out, "merged output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (preprocess->parsed()) {
            auto result = fpd::cmd_preprocess(resolved_config(flags));
            std::cout << "preprocess: " << result.written << " written, " << result.skipped
                      << " up to date\n";
        } else if (train->parsed()) {
            auto result = fpd::cmd_train(resolved_config(flags));
            for (const auto& w : result.weight_files) std::cout << "weights: " << w.string() << "\n";
            for (const auto& h : result.history_files)
                std::cout << "history: " << h.string() << "\n";
        } else if (eval->parsed()) {
            auto result = fpd::cmd_eval_lopo(resolved_config(flags));
            std::cout << "report: " << result.report_path.string() << "\n"
                      << "folds:  " << result.details_path.string() << "\n"
                      << result.row.modality << "," << result.row.model
                      << ": f1=" << fpd::format_metric(result.row.avg_f1)
                      << " precision=" << fpd::format_metric(result.row.avg_precision)
                      << " recall=" << fpd::format_metric(result.row.avg_recall) << "\n";
        } else if (report->parsed()) {
            std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
            std::filesystem::path out =
                flags.out_dir.empty() ? std::filesystem::path(report_out)
                                      : std::filesystem::path(flags.out_dir) / report_out;
            auto rows = fpd::cmd_report(paths, out);
            std::cout << "merged " << rows.size() << " rows into " << out.string() << "\n";
        }
    } catch (const fpd::Error& e) {
        std::cerr << "error: " << e.category_str() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
