#pragma once

#include "agrimm/common/clock.hpp"
#include "agrimm/corpus/corpus.hpp"
#include "agrimm/synthesis/chat_client.hpp"
#include "agrimm/synthesis/stages.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace agrimm::synthesis {

enum class RunStatus { Complete, AwaitingReview, Interrupted, Planned };
std::string_view to_string(RunStatus s);

/// Resumability record persisted as run_state.json.
struct RunState {
  std::string run_id;
  std::string config_hash;
  /// stage1 -> image ids captioned, stage2 -> class labels retrieved,
  /// stage3 -> image ids with a full QA set. Sorted.
  std::map<std::string, std::vector<std::string>> cursors;
  /// stage -> item -> failure reason, for the most recent attempt.
  std::map<std::string, std::map<std::string, std::string>> failures;
  std::vector<std::string> excluded_classes;
  RunStatus status = RunStatus::Interrupted;

  nlohmann::json to_json() const;
  static RunState from_json(const nlohmann::json& value);
};

struct PipelineOptions {
  std::filesystem::path workdir;
  SynthesisConfig cfg;
  /// Stamped on every artifact line; a workdir produced under a different
  /// hash is refused unless `force`.
  std::string config_hash;
  std::size_t workers = 4;
  bool auto_approve = false;
  bool force = false;
  bool dry_run = false;
  /// Fraction of new knowledge entries routed to human review; the rest are
  /// approved by the "sampling" reviewer. 1.0 reviews everything.
  double review_sample_rate = 1.0;
  /// Poll the review queue for up to this long before Stage III.
  std::chrono::milliseconds wait_for_review{0};
  std::chrono::milliseconds review_poll{500};
  Clock clock = system_clock();
  /// Checked between items; when set the run flushes and returns Interrupted.
  const std::atomic<bool>* cancel = nullptr;
};

struct RunSummary {
  RunState state;
  std::size_t captions = 0;
  std::size_t knowledge_entries = 0;
  std::size_t qa_pairs = 0;
  std::size_t images_awaiting_review = 0;
  std::size_t images_excluded = 0;
  std::vector<std::string> report;
};

inline constexpr std::string_view kCaptionsFile = "captions.jsonl";
inline constexpr std::string_view kQaFile = "qa.jsonl";
inline constexpr std::string_view kRunStateFile = "run_state.json";
inline constexpr std::string_view kKnowledgePartialFile = "knowledge.partial.jsonl";

/// Runs (or resumes) Stages I-III over `manifest` in `options.workdir`.
///
/// Stage I captions every record; Stage II retrieves knowledge per distinct
/// class in batches and enqueues it for review (knowledge.jsonl and
/// verdicts.jsonl in the workdir); Stage III runs only for records whose
/// class is Approved or Edited. Items already present in the artifacts are
/// skipped, so rerunning after an interruption converges to the same bytes
/// as an uninterrupted run. Per-item failures are recorded in run_state.json.
RunSummary run_pipeline(const corpus::CorpusManifest& manifest, ChatClient& client, const PipelineOptions& options);

/// Gate audit: every QA pair's knowledge_hash must equal the content hash of
/// an Approved/Edited entry for its image's class. Returns violations.
std::vector<std::string> audit_gate(const std::filesystem::path& workdir, const corpus::CorpusManifest& manifest);

std::optional<RunState> load_run_state(const std::filesystem::path& workdir);

}  // namespace agrimm::synthesis
