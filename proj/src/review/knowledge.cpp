#include "agrimm/review/knowledge.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/hash.hpp"

#include <algorithm>
#include <cctype>

namespace agrimm::review {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<std::string> optional_field(const json& v, const char* key) {
  auto it = v.find(key);
  if (it == v.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::ParseError, key, "expected a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(KnowledgeKind k) {
  return k == KnowledgeKind::Species ? "Species" : "Disease";
}

std::string_view to_string(EntryState s) {
  switch (s) {
    case EntryState::Pending: return "Pending";
    case EntryState::Approved: return "Approved";
    case EntryState::Rejected: return "Rejected";
    case EntryState::Edited: return "Edited";
  }
  return "Pending";
}

std::string_view to_string(VerdictAction a) {
  switch (a) {
    case VerdictAction::Approve: return "Approve";
    case VerdictAction::Reject: return "Reject";
    case VerdictAction::Edit: return "Edit";
  }
  return "Approve";
}

KnowledgeKind parse_kind(std::string_view text) {
  const auto s = lower(text);
  if (s == "species") return KnowledgeKind::Species;
  if (s == "disease") return KnowledgeKind::Disease;
  throw Error(Errc::ParseError, std::string(text), "unknown knowledge kind");
}

EntryState parse_state(std::string_view text) {
  const auto s = lower(text);
  if (s == "pending") return EntryState::Pending;
  if (s == "approved") return EntryState::Approved;
  if (s == "rejected") return EntryState::Rejected;
  if (s == "edited") return EntryState::Edited;
  throw Error(Errc::ParseError, std::string(text), "unknown entry state");
}

VerdictAction parse_action(std::string_view text) {
  const auto s = lower(text);
  if (s == "approve") return VerdictAction::Approve;
  if (s == "reject") return VerdictAction::Reject;
  if (s == "edit") return VerdictAction::Edit;
  throw Error(Errc::ParseError, std::string(text), "unknown verdict action");
}

json Verdict::to_json() const {
  json out{{"entry_id", entry_id},
           {"action", to_string(action)},
           {"reviewer_id", reviewer_id},
           {"timestamp", timestamp}};
  if (edited_text) out["edited_text"] = *edited_text;
  if (note) out["note"] = *note;
  return out;
}

Verdict Verdict::from_json(const json& value) {
  if (!value.is_object()) throw Error(Errc::ParseError, "verdict", "expected an object");
  Verdict v;
  v.entry_id = optional_field(value, "entry_id").value_or("");
  auto action = optional_field(value, "action");
  if (!action) throw Error(Errc::ParseError, "action", "missing");
  v.action = parse_action(*action);
  v.edited_text = optional_field(value, "edited_text");
  v.note = optional_field(value, "note");
  v.reviewer_id = optional_field(value, "reviewer_id").value_or("");
  v.timestamp = optional_field(value, "timestamp").value_or("");
  return v;
}

const std::string& KnowledgeEntry::exported_text() const {
  if (state == EntryState::Edited && edited_text) return *edited_text;
  return description;
}

std::string KnowledgeEntry::content_hash() const { return sha256_hex(exported_text()); }

json KnowledgeEntry::to_json() const {
  json history_json = json::array();
  for (const auto& v : history) history_json.push_back(v.to_json());
  json out{{"id", id},
           {"class_label", class_label},
           {"kind", to_string(kind)},
           {"description", description},
           {"source_citations", source_citations},
           {"state", to_string(state)},
           {"reviewer_note", reviewer_note ? json(*reviewer_note) : json(nullptr)},
           {"edited_text", edited_text ? json(*edited_text) : json(nullptr)},
           {"history", std::move(history_json)},
           {"reretrievals", reretrievals},
           {"config_hash", config_hash}};
  if (is_exportable()) out["content_hash"] = content_hash();
  return out;
}

KnowledgeEntry KnowledgeEntry::from_json(const json& value) {
  if (!value.is_object()) throw Error(Errc::ParseError, "entry", "expected an object");
  KnowledgeEntry e;
  e.class_label = optional_field(value, "class_label").value_or("");
  if (e.class_label.empty()) throw Error(Errc::ParseError, "class_label", "missing");
  e.id = optional_field(value, "id").value_or(entry_id_for(e.class_label));
  e.kind = parse_kind(optional_field(value, "kind").value_or("Species"));
  e.description = optional_field(value, "description").value_or("");
  if (auto it = value.find("source_citations"); it != value.end() && it->is_array()) {
    for (const auto& c : *it) {
      if (c.is_string()) e.source_citations.push_back(c.get<std::string>());
    }
  }
  e.state = parse_state(optional_field(value, "state").value_or("Pending"));
  e.reviewer_note = optional_field(value, "reviewer_note");
  e.edited_text = optional_field(value, "edited_text");
  if (auto it = value.find("history"); it != value.end() && it->is_array()) {
    for (const auto& h : *it) e.history.push_back(Verdict::from_json(h));
  }
  e.reretrievals = value.value("reretrievals", 0);
  e.config_hash = optional_field(value, "config_hash").value_or("");
  return e;
}

std::string entry_id_for(std::string_view class_label) { return short_hash(class_label, 12); }

KnowledgeEntry make_entry(std::string class_label, KnowledgeKind kind, std::string description,
                          std::vector<std::string> citations) {
  KnowledgeEntry e;
  e.id = entry_id_for(class_label);
  e.class_label = std::move(class_label);
  e.kind = kind;
  e.description = std::move(description);
  e.source_citations = std::move(citations);
  return e;
}

}  // namespace agrimm::review
