#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace agrimm::runtime {

struct ModelResult {
  std::map<std::string, double> metrics;  // 0-100, two decimals
  std::optional<std::string> failure;
};

struct JudgeSummary {
  std::optional<double> mean_score;
  std::optional<double> normalized_pct;
  std::size_t failure_count = 0;
  std::string normalization;
};

struct EvalReport {
  /// dataset -> model -> result
  std::map<std::string, std::map<std::string, ModelResult>> results;
  std::map<std::string, std::map<std::string, JudgeSummary>> judge;
  std::string config_hash;
  std::string generated_at;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& value);
};

enum class ReportFormat { Json, Markdown };
ReportFormat parse_report_format(std::string_view text);

/// Sorted keys, two-space indent, scores at two decimals, trailing newline.
std::string render_json(const EvalReport& report);

/// One table per dataset (models as rows, metrics as columns) with the best
/// score in each column in bold; every tied best is bolded.
std::string render_markdown(const EvalReport& report);

/// Errc::IoError when the file cannot be written.
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace agrimm::runtime
