#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "noisy_ood/experiment.hpp"

namespace noisy_ood {

// report.csv: one row per (table, condition) with columns
//   table,condition,n_runs,<m>_id_mean,<m>_id_std,<m>_ood_mean,<m>_ood_std,
//   <m>_diff_mean,<m>_diff_std,<m>_absdiff_mean,<m>_absdiff_std
// for m in auc,f1,acc,rec,spec. Values use %.17g.
std::string format_report_csv(const std::vector<TableReport>& tables);

/// Per-run metrics, one row per (table, condition, seed), full precision.
std::string format_runs_csv(const std::vector<RunResult>& runs);

/// Markdown tables: one per composition, noise row before baseline, columns
/// ID / OOD / Diff. for AUC, F1, Acc., Rec., Spec., two decimals.
std::string format_report_markdown(const std::vector<TableReport>& tables);

/// Parses text produced by format_report_csv. Seed lists are not stored, so
/// the aggregates come back with empty `seeds`.
std::vector<TableReport> parse_report_csv(const std::string& text);
std::vector<TableReport> read_report_csv(const std::filesystem::path& path);

enum class ReportFormat { Csv, Markdown, Both };

/// Writes report.csv and/or report.md, runs.csv, config.resolved.json and the
/// per-run history/checkpoint files under `dir`. Main-table runs go to
/// dir/<condition>/<seed>/, ablation runs to dir/ablations/<name>/<condition>/<seed>/.
void write_report(const Report& report, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                  ReportFormat format = ReportFormat::Both);

/// Writes `text` to `path` byte for byte, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace noisy_ood
