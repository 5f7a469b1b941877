#include "agrimm/runtime/report.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/common/numeric.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <vector>

namespace agrimm::runtime {

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

json optional_number(const std::optional<double>& v, int decimals) {
  return v ? json(round_half_even(*v, decimals)) : json(nullptr);
}

std::optional<double> read_optional(const json& v, const char* key) {
  if (!v.contains(key) || v.at(key).is_null()) return std::nullopt;
  return v.at(key).get<double>();
}

// Lexical metrics lead in a fixed order; anything else follows by name.
int metric_rank(const std::string& name) {
  static const std::vector<std::string> order = {"BLEU-4", "ROUGE-2", "METEOR"};
  auto it = std::find(order.begin(), order.end(), name);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

constexpr const char* kJudgeColumn = "LLM Judge (%)";

}  // namespace

json EvalReport::to_json() const {
  json res = json::object();
  for (const auto& [dataset, models] : results) {
    for (const auto& [model, r] : models) {
      json entry = json::object();
      if (r.failure) {
        entry["failed"] = *r.failure;
      } else {
        json metrics = json::object();
        for (const auto& [name, score] : r.metrics) metrics[name] = round_half_even(score, 2);
        entry["metrics"] = metrics;
      }
      res[dataset][model] = entry;
    }
  }
  json jud = json::object();
  for (const auto& [dataset, models] : judge) {
    for (const auto& [model, s] : models) {
      jud[dataset][model] = {{"mean_score", optional_number(s.mean_score, 4)},
                             {"normalized_pct", optional_number(s.normalized_pct, 2)},
                             {"failure_count", s.failure_count},
                             {"normalization", s.normalization}};
    }
  }
  return {{"results", res},
          {"judge", jud},
          {"metadata", {{"config_hash", config_hash}, {"generated_at", generated_at}}}};
}

EvalReport EvalReport::from_json(const json& value) {
  EvalReport r;
  try {
    const json results = value.value("results", json::object());
    const json judged = value.value("judge", json::object());
    for (const auto& [dataset, models] : results.items()) {
      for (const auto& [model, entry] : models.items()) {
        ModelResult m;
        if (entry.contains("failed")) m.failure = entry.at("failed").get<std::string>();
        const json scores = entry.value("metrics", json::object());
        for (const auto& [name, score] : scores.items()) {
          m.metrics[name] = score.get<double>();
        }
        r.results[dataset][model] = std::move(m);
      }
    }
    for (const auto& [dataset, models] : judged.items()) {
      for (const auto& [model, entry] : models.items()) {
        JudgeSummary s;
        s.mean_score = read_optional(entry, "mean_score");
        s.normalized_pct = read_optional(entry, "normalized_pct");
        s.failure_count = entry.value("failure_count", std::size_t{0});
        s.normalization = entry.value("normalization", "");
        r.judge[dataset][model] = s;
      }
    }
    const auto meta = value.value("metadata", json::object());
    r.config_hash = meta.value("config_hash", "");
    r.generated_at = meta.value("generated_at", "");
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, "eval report", e.what());
  }
  return r;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw Error(Errc::ConfigError, std::string(text), "format must be json or markdown");
}

std::string render_json(const EvalReport& report) { return report.to_json().dump(2) + "\n"; }

std::string render_markdown(const EvalReport& report) {
  std::set<std::string> datasets;
  for (const auto& [d, m] : report.results) datasets.insert(d);
  for (const auto& [d, m] : report.judge) datasets.insert(d);

  std::string out = "# Evaluation report\n\n";
  if (!report.config_hash.empty()) out += "config_hash: `" + report.config_hash + "`\n\n";
  for (const auto& dataset : datasets) {
    std::set<std::string> models;
    std::vector<std::string> columns;
    std::map<std::string, std::map<std::string, double>> cell;  // model -> column -> value
    std::map<std::string, std::string> failed;
    if (auto it = report.results.find(dataset); it != report.results.end()) {
      for (const auto& [model, r] : it->second) {
        models.insert(model);
        if (r.failure) failed[model] = *r.failure;
        for (const auto& [name, score] : r.metrics) {
          cell[model][name] = round_half_even(score, 2);
          if (std::find(columns.begin(), columns.end(), name) == columns.end()) columns.push_back(name);
        }
      }
    }
    std::stable_sort(columns.begin(), columns.end(), [](const std::string& a, const std::string& b) {
      const int ra = metric_rank(a);
      const int rb = metric_rank(b);
      return ra != rb ? ra < rb : a < b;
    });
    if (auto it = report.judge.find(dataset); it != report.judge.end()) {
      bool any = false;
      for (const auto& [model, s] : it->second) {
        models.insert(model);
        if (s.normalized_pct) {
          cell[model][kJudgeColumn] = round_half_even(*s.normalized_pct, 2);
          any = true;
        }
      }
      if (any) columns.push_back(kJudgeColumn);
    }

    std::map<std::string, double> best;
    for (const auto& col : columns) {
      for (const auto& [model, values] : cell) {
        auto v = values.find(col);
        if (v == values.end()) continue;
        auto [b, inserted] = best.emplace(col, v->second);
        if (!inserted) b->second = std::max(b->second, v->second);
      }
    }

    out += "## " + dataset + "\n\n| Model |";
    for (const auto& col : columns) out += " " + col + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) out += "---:|";
    out += "\n";
    for (const auto& model : models) {
      out += "| " + model + " |";
      for (const auto& col : columns) {
        auto m = cell.find(model);
        if (m == cell.end() || !m->second.count(col)) {
          out += failed.count(model) && col != kJudgeColumn ? " failed |" : " - |";
          continue;
        }
        const double v = m->second.at(col);
        const std::string text = fixed2(v);
        out += v == best.at(col) ? " **" + text + "** |" : " " + text + " |";
      }
      out += "\n";
    }
    for (const auto& [model, reason] : failed) out += "\n" + model + " failed: " + reason + "\n";
    out += "\n";
  }
  return out;
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  const std::string text = format == ReportFormat::Json ? render_json(report) : render_markdown(report);
  try {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_text_file_atomic(path, text);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(Errc::IoError, path.string(), e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::IoError) throw;
    throw Error(Errc::IoError, path.string(), e.what());
  }
}

}  // namespace agrimm::runtime
