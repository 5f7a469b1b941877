#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agrimm::review {

enum class KnowledgeKind { Species, Disease };
enum class EntryState { Pending, Approved, Rejected, Edited };
enum class VerdictAction { Approve, Reject, Edit };

std::string_view to_string(KnowledgeKind k);
std::string_view to_string(EntryState s);
std::string_view to_string(VerdictAction a);
KnowledgeKind parse_kind(std::string_view text);
/// Case-insensitive. Throws Errc::ParseError on unknown values.
EntryState parse_state(std::string_view text);
VerdictAction parse_action(std::string_view text);

struct Verdict {
  std::string entry_id;
  VerdictAction action = VerdictAction::Approve;
  std::optional<std::string> edited_text;
  std::optional<std::string> note;
  std::string reviewer_id;
  std::string timestamp;

  nlohmann::json to_json() const;
  static Verdict from_json(const nlohmann::json& value);
};

/// Per-class description retrieved in Stage II and gated by human review.
struct KnowledgeEntry {
  std::string id;  // entry_id_for(class_label)
  std::string class_label;
  KnowledgeKind kind = KnowledgeKind::Species;
  std::string description;
  std::vector<std::string> source_citations;
  EntryState state = EntryState::Pending;
  std::optional<std::string> reviewer_note;
  std::optional<std::string> edited_text;
  std::vector<Verdict> history;  // append-only
  int reretrievals = 0;
  std::string config_hash;

  /// Text Stage III consumes: edited_text for Edited entries, else description.
  const std::string& exported_text() const;
  /// SHA-256 of exported_text(); the provenance key QA pairs carry.
  std::string content_hash() const;
  bool is_exportable() const noexcept {
    return state == EntryState::Approved || state == EntryState::Edited;
  }

  nlohmann::json to_json() const;
  static KnowledgeEntry from_json(const nlohmann::json& value);
};

/// Stable URL-safe id derived from the class label.
std::string entry_id_for(std::string_view class_label);

/// Fresh Pending entry.
KnowledgeEntry make_entry(std::string class_label, KnowledgeKind kind, std::string description,
                          std::vector<std::string> citations = {});

}  // namespace agrimm::review
