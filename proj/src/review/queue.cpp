#include "agrimm/review/queue.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"

#include <algorithm>
#include <fstream>

namespace agrimm::review {

namespace {

bool blank(const std::optional<std::string>& s) {
  return !s || s->find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

json ReviewStats::to_json() const {
  return json{{"pending", pending},
              {"approved", approved},
              {"rejected", rejected},
              {"edited", edited},
              {"total", total()}};
}

ReviewQueue::ReviewQueue(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(*dir_, ec);
  if (ec) throw Error(Errc::PersistenceError, dir_->string(), ec.message());
  reload();
}

void ReviewQueue::reload() {
  if (!dir_) return;
  order_.clear();
  by_id_.clear();
  const auto path = *dir_ / kSnapshotFile;
  if (!std::filesystem::exists(path)) return;
  try {
    for_each_jsonl(path, [&](const json& value, std::size_t) {
      auto entry = KnowledgeEntry::from_json(value);
      if (by_id_.count(entry.id) == 0) order_.push_back(entry.id);
      by_id_[entry.id] = std::move(entry);
    });
  } catch (const Error& e) {
    throw Error(Errc::PersistenceError, path.string(), e.what());
  }
}

void ReviewQueue::persist_snapshot() const {
  if (!dir_) return;
  std::string out;
  for (const auto& id : order_) {
    out += to_jsonl_line(by_id_.at(id).to_json());
    out += '\n';
  }
  try {
    write_text_file_atomic(*dir_ / kSnapshotFile, out);
  } catch (const Error& e) {
    throw Error(Errc::PersistenceError, dir_->string(), e.what());
  }
}

void ReviewQueue::append_log(std::span<const Verdict> verdicts) const {
  if (!dir_ || verdicts.empty()) return;
  std::ofstream out(*dir_ / kVerdictLog, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::PersistenceError, (*dir_ / kVerdictLog).string(), "cannot append");
  for (const auto& v : verdicts) out << to_jsonl_line(v.to_json()) << '\n';
}

void ReviewQueue::enqueue(std::vector<KnowledgeEntry> entries) {
  for (const auto& e : entries) {
    if (e.state != EntryState::Pending) {
      throw Error(Errc::StateError, e.class_label, "only Pending entries can be enqueued");
    }
  }
  for (auto& e : entries) {
    if (e.id.empty()) e.id = entry_id_for(e.class_label);
    auto it = by_id_.find(e.id);
    if (it == by_id_.end()) {
      order_.push_back(e.id);
      by_id_.emplace(e.id, std::move(e));
      continue;
    }
    auto& existing = it->second;
    switch (existing.state) {
      case EntryState::Pending:
        existing.description = std::move(e.description);
        existing.source_citations = std::move(e.source_citations);
        existing.kind = e.kind;
        existing.config_hash = std::move(e.config_hash);
        break;
      case EntryState::Rejected: {
        existing.description = std::move(e.description);
        existing.source_citations = std::move(e.source_citations);
        existing.config_hash = std::move(e.config_hash);
        existing.state = EntryState::Pending;
        existing.reviewer_note.reset();
        existing.reretrievals += 1;
        auto pos = std::find(order_.begin(), order_.end(), existing.id);
        std::rotate(pos, pos + 1, order_.end());
        break;
      }
      case EntryState::Approved:
      case EntryState::Edited:
        throw Error(Errc::StateError, existing.class_label,
                    "class already verified; cannot replace " + std::string(to_string(existing.state)));
    }
  }
  persist_snapshot();
}

KnowledgeEntry ReviewQueue::apply_one(const Verdict& verdict) {
  auto it = by_id_.find(verdict.entry_id);
  if (it == by_id_.end()) throw Error(Errc::NotFound, verdict.entry_id);
  auto& entry = it->second;
  if (entry.state != EntryState::Pending) {
    throw Error(Errc::StateError, verdict.entry_id,
                "entry already " + std::string(to_string(entry.state)));
  }
  switch (verdict.action) {
    case VerdictAction::Approve:
      entry.state = EntryState::Approved;
      break;
    case VerdictAction::Edit:
      if (blank(verdict.edited_text)) {
        throw Error(Errc::ValidationFailed, "edited_text", "Edit requires non-empty edited_text");
      }
      entry.state = EntryState::Edited;
      entry.edited_text = verdict.edited_text;
      if (verdict.note) entry.reviewer_note = verdict.note;
      break;
    case VerdictAction::Reject:
      if (blank(verdict.note)) {
        throw Error(Errc::ValidationFailed, "note", "Reject requires a reviewer note");
      }
      entry.state = EntryState::Rejected;
      entry.reviewer_note = verdict.note;
      break;
  }
  entry.history.push_back(verdict);
  return entry;
}

KnowledgeEntry ReviewQueue::apply_verdict(const Verdict& verdict) {
  auto entry = apply_one(verdict);
  append_log(std::span(&verdict, 1));
  persist_snapshot();
  return entry;
}

std::vector<KnowledgeEntry> ReviewQueue::apply_verdicts(std::span<const Verdict> verdicts) {
  std::vector<KnowledgeEntry> out;
  std::size_t applied = 0;
  try {
    for (const auto& v : verdicts) {
      out.push_back(apply_one(v));
      ++applied;
    }
  } catch (...) {
    append_log(verdicts.first(applied));
    persist_snapshot();
    throw;
  }
  append_log(verdicts);
  persist_snapshot();
  return out;
}

std::vector<KnowledgeEntry> ReviewQueue::export_approved() const {
  std::vector<KnowledgeEntry> out;
  for (const auto& id : order_) {
    const auto& e = by_id_.at(id);
    if (e.is_exportable()) out.push_back(e);
  }
  std::sort(out.begin(), out.end(),
            [](const KnowledgeEntry& a, const KnowledgeEntry& b) { return a.class_label < b.class_label; });
  return out;
}

std::vector<ReretrievalRequest> ReviewQueue::reretrieval_requests(int max_reretrievals) const {
  std::vector<ReretrievalRequest> out;
  for (const auto& id : order_) {
    const auto& e = by_id_.at(id);
    if (e.state == EntryState::Rejected && e.reretrievals < max_reretrievals) {
      out.push_back({e.class_label, e.kind, e.reviewer_note.value_or(""), e.reretrievals});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.class_label < b.class_label; });
  return out;
}

std::vector<std::string> ReviewQueue::exhausted_classes(int max_reretrievals) const {
  std::vector<std::string> out;
  for (const auto& id : order_) {
    const auto& e = by_id_.at(id);
    if (e.state == EntryState::Rejected && e.reretrievals >= max_reretrievals) out.push_back(e.class_label);
  }
  std::sort(out.begin(), out.end());
  return out;
}

const KnowledgeEntry* ReviewQueue::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &it->second;
}

const KnowledgeEntry* ReviewQueue::find_by_label(std::string_view class_label) const {
  return find(entry_id_for(class_label));
}

std::vector<KnowledgeEntry> ReviewQueue::entries(std::optional<EntryState> state) const {
  std::vector<KnowledgeEntry> out;
  for (const auto& id : order_) {
    const auto& e = by_id_.at(id);
    if (!state || e.state == *state) out.push_back(e);
  }
  return out;
}

ReviewStats ReviewQueue::stats() const {
  ReviewStats s;
  for (const auto& [id, e] : by_id_) {
    switch (e.state) {
      case EntryState::Pending: ++s.pending; break;
      case EntryState::Approved: ++s.approved; break;
      case EntryState::Rejected: ++s.rejected; break;
      case EntryState::Edited: ++s.edited; break;
    }
  }
  return s;
}

}  // namespace agrimm::review
