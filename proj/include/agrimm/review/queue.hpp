#pragma once

#include "agrimm/review/knowledge.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace agrimm::review {

struct ReviewStats {
  std::size_t pending = 0;
  std::size_t approved = 0;
  std::size_t rejected = 0;
  std::size_t edited = 0;

  std::size_t total() const noexcept { return pending + approved + rejected + edited; }
  nlohmann::json to_json() const;
};

/// A rejected class waiting to re-enter Stage II.
struct ReretrievalRequest {
  std::string class_label;
  KnowledgeKind kind = KnowledgeKind::Species;
  std::string note;  // corrective context for the next Stage II prompt
  int reretrievals = 0;
};

/// FIFO verification queue over Stage II knowledge entries.
///
/// When constructed with a directory, the queue snapshot lives in
/// `<dir>/knowledge.jsonl` (rewritten atomically after each mutation) and
/// every accepted verdict is appended to `<dir>/verdicts.jsonl`. Not
/// thread-safe; see ReviewService for concurrent access.
class ReviewQueue {
 public:
  ReviewQueue() = default;
  explicit ReviewQueue(std::filesystem::path dir);

  static constexpr std::string_view kSnapshotFile = "knowledge.jsonl";
  static constexpr std::string_view kVerdictLog = "verdicts.jsonl";

  /// Entries must be Pending (Errc::StateError otherwise). A class already
  /// Pending is replaced in place; a Rejected class is requeued at the back
  /// with its re-retrieval counter bumped; Approved/Edited classes refuse
  /// the upsert with Errc::StateError.
  void enqueue(std::vector<KnowledgeEntry> entries);

  /// Applies one verdict. Errc::NotFound for unknown ids, Errc::StateError
  /// when the entry is already final, Errc::ValidationFailed when an Edit
  /// lacks text or a Reject lacks a note.
  KnowledgeEntry apply_verdict(const Verdict& verdict);

  /// Same as apply_verdict for each element, persisting once at the end.
  /// Stops at the first failure (earlier verdicts stay applied).
  std::vector<KnowledgeEntry> apply_verdicts(std::span<const Verdict> verdicts);

  /// Approved and Edited entries in class_label order.
  std::vector<KnowledgeEntry> export_approved() const;

  /// Rejected classes still under the re-retrieval cap.
  std::vector<ReretrievalRequest> reretrieval_requests(int max_reretrievals) const;
  /// Rejected classes that exhausted the cap; excluded from Stage III.
  std::vector<std::string> exhausted_classes(int max_reretrievals) const;

  const KnowledgeEntry* find(std::string_view id) const;
  const KnowledgeEntry* find_by_label(std::string_view class_label) const;
  /// FIFO order, optionally filtered by state.
  std::vector<KnowledgeEntry> entries(std::optional<EntryState> state = std::nullopt) const;
  ReviewStats stats() const;
  std::size_t size() const noexcept { return order_.size(); }

  /// Re-reads the snapshot from disk (no-op for in-memory queues).
  void reload();

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

 private:
  KnowledgeEntry apply_one(const Verdict& verdict);
  void persist_snapshot() const;
  void append_log(std::span<const Verdict> verdicts) const;

  std::optional<std::filesystem::path> dir_;
  std::vector<std::string> order_;  // entry ids, FIFO
  std::unordered_map<std::string, KnowledgeEntry> by_id_;
};

}  // namespace agrimm::review
