#include "agrimm/synthesis/pipeline.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/hash.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/review/queue.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace agrimm::synthesis {

using corpus::ImageRecord;
using review::KnowledgeEntry;
using review::KnowledgeKind;
namespace fs = std::filesystem;

namespace {

bool cancelled(const PipelineOptions& o) { return o.cancel != nullptr && o.cancel->load(); }

// Runs fn(i) for i in [0, n) on `width` threads. Stops handing out work once
// cancelled; the first escaping exception is rethrown after the join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t width, const PipelineOptions& o, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> abort{false};
  auto worker = [&] {
    for (;;) {
      if (abort.load() || cancelled(o)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        abort = true;
        return;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(width, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

KnowledgeKind kind_for(corpus::Component c) {
  return c == corpus::Component::Disease ? KnowledgeKind::Disease : KnowledgeKind::Species;
}

std::string failure_reason(const Error& e) { return std::string(e.what()); }

void write_sorted_lines(const fs::path& path, std::vector<std::pair<std::string, std::string>> keyed_lines) {
  std::sort(keyed_lines.begin(), keyed_lines.end());
  std::string out;
  for (const auto& [key, line] : keyed_lines) {
    out += line;
    out += '\n';
  }
  write_text_file_atomic(path, out);
}

std::map<std::string, Caption> load_captions(const fs::path& path) {
  std::map<std::string, Caption> out;
  if (!fs::exists(path)) return out;
  for_each_jsonl(
      path,
      [&](const json& v, std::size_t) {
        auto c = Caption::from_json(v);
        out.emplace(c.image_id, std::move(c));
      },
      TrailingLine::Tolerate);
  return out;
}

// Only complete five-category sets count; torn sets are dropped and redone.
std::map<std::string, std::vector<json>> load_qa(const fs::path& path) {
  std::map<std::string, std::vector<json>> grouped;
  if (!fs::exists(path)) return grouped;
  for_each_jsonl(
      path, [&](const json& v, std::size_t) { grouped[v.value("image_id", "")].push_back(v); },
      TrailingLine::Tolerate);
  for (auto it = grouped.begin(); it != grouped.end();) {
    std::set<std::string> cats;
    for (const auto& v : it->second) cats.insert(v.value("category", ""));
    if (it->second.size() != kQACategories.size() || cats.size() != kQACategories.size()) {
      it = grouped.erase(it);
    } else {
      ++it;
    }
  }
  return grouped;
}

std::string qa_sort_key(const json& v) {
  const auto cat = parse_qa_category(v.value("category", ""));
  return v.value("image_id", "") + '\x1f' + std::to_string(cat ? static_cast<int>(*cat) : 9);
}

std::string compute_run_id(const std::string& config_hash, const corpus::CorpusManifest& manifest) {
  std::vector<std::string> ids;
  ids.reserve(manifest.records.size());
  for (const auto& r : manifest.records) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  std::string material = config_hash;
  for (const auto& id : ids) {
    material += '\n';
    material += id;
  }
  return short_hash(material, 16);
}

void save_state(const fs::path& workdir, const RunState& state) {
  write_text_file_atomic(workdir / kRunStateFile, state.to_json().dump(2) + "\n");
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Complete: return "complete";
    case RunStatus::AwaitingReview: return "awaiting_review";
    case RunStatus::Interrupted: return "interrupted";
    case RunStatus::Planned: return "planned";
  }
  return "interrupted";
}

json RunState::to_json() const {
  return json{{"run_id", run_id},
              {"config_hash", config_hash},
              {"cursors", cursors},
              {"failures", failures},
              {"excluded_classes", excluded_classes},
              {"status", to_string(status)}};
}

RunState RunState::from_json(const json& value) {
  RunState s;
  s.run_id = value.value("run_id", "");
  s.config_hash = value.value("config_hash", "");
  if (value.contains("cursors")) s.cursors = value.at("cursors").get<decltype(s.cursors)>();
  if (value.contains("failures")) s.failures = value.at("failures").get<decltype(s.failures)>();
  if (value.contains("excluded_classes")) s.excluded_classes = value.at("excluded_classes").get<std::vector<std::string>>();
  const auto status = value.value("status", "interrupted");
  for (auto st : {RunStatus::Complete, RunStatus::AwaitingReview, RunStatus::Interrupted, RunStatus::Planned}) {
    if (to_string(st) == status) s.status = st;
  }
  return s;
}

std::optional<RunState> load_run_state(const fs::path& workdir) {
  const auto path = workdir / kRunStateFile;
  if (!fs::exists(path)) return std::nullopt;
  try {
    return RunState::from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string(), e.what());
  }
}

RunSummary run_pipeline(const corpus::CorpusManifest& manifest, ChatClient& client, const PipelineOptions& o) {
  std::error_code ec;
  fs::create_directories(o.workdir, ec);
  if (ec) throw Error(Errc::IoError, o.workdir.string(), ec.message());

  RunSummary summary;
  RunState& state = summary.state;
  if (auto previous = load_run_state(o.workdir)) {
    if (previous->config_hash != o.config_hash && !o.force) {
      throw Error(Errc::ConfigError, "config_hash",
                  "workdir was produced with config " + previous->config_hash + ", current is " + o.config_hash +
                      " (use --force to continue anyway)");
    }
  }
  state.run_id = compute_run_id(o.config_hash, manifest);
  state.config_hash = o.config_hash;

  SynthesisConfig cfg = o.cfg;
  cfg.seed_material = o.config_hash;

  std::vector<const ImageRecord*> records;
  for (const auto& r : manifest.records) records.push_back(&r);
  std::sort(records.begin(), records.end(), [](auto* a, auto* b) { return a->id < b->id; });

  const fs::path captions_path = o.workdir / kCaptionsFile;
  const fs::path qa_path = o.workdir / kQaFile;
  const fs::path partial_path = o.workdir / kKnowledgePartialFile;

  auto finish_interrupted = [&](std::string stage) {
    state.status = RunStatus::Interrupted;
    summary.report.push_back("interrupted during " + stage);
    save_state(o.workdir, state);
    return summary;
  };

  // ---- Stage I ----------------------------------------------------------
  auto captions = load_captions(captions_path);
  {
    std::vector<const ImageRecord*> pending;
    for (const auto* r : records) {
      if (!captions.count(r->id)) pending.push_back(r);
    }
    if (o.dry_run) {
      summary.report.push_back("stage1: " + std::to_string(pending.size()) + " images to caption");
    } else {
      auto& failures = state.failures["stage1"];
      failures.clear();
      std::mutex mutex;
      {
        JsonlAppender out(captions_path);
        parallel_for(pending.size(), o.workers, o, [&](std::size_t i) {
          const auto& r = *pending[i];
          try {
            auto c = stage1_caption(r, client, cfg, o.clock);
            auto line = c.to_json();
            line["config_hash"] = o.config_hash;
            out.append(line);
            std::lock_guard lock(mutex);
            captions.emplace(r.id, std::move(c));
          } catch (const Error& e) {
            if (e.code() != Errc::EndpointError && e.code() != Errc::ValidationFailed) throw;
            std::lock_guard lock(mutex);
            failures[r.id] = failure_reason(e);
          }
        });
      }
      std::vector<std::pair<std::string, std::string>> lines;
      for (const auto& [id, c] : captions) {
        auto line = c.to_json();
        line["config_hash"] = o.config_hash;
        lines.emplace_back(id, to_jsonl_line(line));
      }
      if (cancelled(o)) {
        state.cursors["stage1"].clear();
        for (const auto& [id, c] : captions) state.cursors["stage1"].push_back(id);
        return finish_interrupted("stage1");
      }
      write_sorted_lines(captions_path, std::move(lines));
    }
    state.cursors["stage1"].clear();
    for (const auto& [id, c] : captions) state.cursors["stage1"].push_back(id);
    summary.captions = captions.size();
    if (!o.dry_run) save_state(o.workdir, state);
  }

  // ---- Stage II ---------------------------------------------------------
  review::ReviewQueue queue(o.workdir);
  std::map<std::string, KnowledgeKind> class_kind;
  for (const auto* r : records) {
    auto [it, inserted] = class_kind.emplace(r->class_label, kind_for(r->component));
    if (!inserted && kind_for(r->component) == KnowledgeKind::Disease) it->second = KnowledgeKind::Disease;
  }
  {
    std::map<std::string, KnowledgeEntry> partial;
    if (fs::exists(partial_path)) {
      for_each_jsonl(
          partial_path,
          [&](const json& v, std::size_t) {
            auto e = KnowledgeEntry::from_json(v);
            partial[e.class_label] = std::move(e);
          },
          TrailingLine::Tolerate);
    }
    CorrectiveNotes notes;
    std::map<KnowledgeKind, std::vector<std::string>> fresh;
    std::vector<std::pair<std::string, KnowledgeKind>> singles;
    for (const auto& [label, kind] : class_kind) {
      if (partial.count(label) || queue.find_by_label(label) != nullptr) continue;
      fresh[kind].push_back(label);
    }
    for (const auto& req : queue.reretrieval_requests(cfg.max_reretrievals)) {
      if (partial.count(req.class_label)) continue;
      notes[req.class_label] = req.note;
      singles.emplace_back(req.class_label, req.kind);
    }
    struct Batch {
      KnowledgeKind kind;
      std::vector<std::string> labels;
    };
    std::vector<Batch> batches;
    const std::size_t width = std::max<std::size_t>(1, cfg.stage2_batch);
    for (const auto& [kind, labels] : fresh) {
      for (std::size_t i = 0; i < labels.size(); i += width) {
        batches.push_back({kind, {labels.begin() + static_cast<std::ptrdiff_t>(i),
                                  labels.begin() + static_cast<std::ptrdiff_t>(std::min(labels.size(), i + width))}});
      }
    }
    for (const auto& [label, kind] : singles) batches.push_back({kind, {label}});

    if (o.dry_run) {
      summary.report.push_back("stage2: " + std::to_string(batches.size()) + " retrieval requests (" +
                               std::to_string(singles.size()) + " re-retrievals)");
    } else {
      auto& failures = state.failures["stage2"];
      failures.clear();
      std::mutex mutex;
      {
        JsonlAppender out(partial_path, 1);
        parallel_for(batches.size(), o.workers, o, [&](std::size_t i) {
          const auto& batch = batches[i];
          try {
            auto entries = stage2_retrieve(batch.labels, batch.kind, client, cfg, notes);
            for (auto& e : entries) {
              e.config_hash = o.config_hash;
              out.append(e.to_json());
            }
            std::lock_guard lock(mutex);
            for (auto& e : entries) partial[e.class_label] = std::move(e);
          } catch (const Error& e) {
            if (e.code() != Errc::EndpointError && e.code() != Errc::MissingClass &&
                e.code() != Errc::JsonShapeError && e.code() != Errc::NoJsonFound &&
                e.code() != Errc::StrictParseError) {
              throw;
            }
            std::lock_guard lock(mutex);
            for (const auto& label : batch.labels) {
              if (!partial.count(label)) failures[label] = failure_reason(e);
            }
          }
        });
      }
      if (cancelled(o)) return finish_interrupted("stage2");

      std::vector<KnowledgeEntry> to_enqueue;
      for (auto& [label, e] : partial) to_enqueue.push_back(std::move(e));  // label order
      std::vector<std::string> new_labels;
      for (const auto& e : to_enqueue) new_labels.push_back(e.class_label);
      if (!to_enqueue.empty()) queue.enqueue(std::move(to_enqueue));
      fs::remove(partial_path, ec);

      std::vector<review::Verdict> auto_verdicts;
      for (const auto& label : new_labels) {
        const auto* e = queue.find_by_label(label);
        if (e == nullptr || e->state != review::EntryState::Pending) continue;
        if (o.auto_approve) {
          auto_verdicts.push_back({e->id, review::VerdictAction::Approve, {}, {}, "auto-approve", o.clock()});
        } else if (o.review_sample_rate < 1.0) {
          const double u = static_cast<double>(std::stoull(sha256_hex(o.config_hash + label).substr(0, 13), nullptr, 16)) /
                           static_cast<double>(1ULL << 52);
          if (u >= o.review_sample_rate) {
            auto_verdicts.push_back({e->id, review::VerdictAction::Approve, {}, {}, "sampling", o.clock()});
          }
        }
      }
      if (!auto_verdicts.empty()) queue.apply_verdicts(auto_verdicts);
    }
    state.cursors["stage2"].clear();
    for (const auto& e : queue.entries()) state.cursors["stage2"].push_back(e.class_label);
    std::sort(state.cursors["stage2"].begin(), state.cursors["stage2"].end());
    summary.knowledge_entries = queue.size();
    if (!o.dry_run) save_state(o.workdir, state);
  }

  // ---- review gate ------------------------------------------------------
  auto pending_needed = [&] {
    std::size_t n = 0;
    for (const auto& [label, kind] : class_kind) {
      const auto* e = queue.find_by_label(label);
      if (e != nullptr && e->state == review::EntryState::Pending) ++n;
    }
    return n;
  };
  if (!o.dry_run && o.wait_for_review.count() > 0) {
    const auto deadline = std::chrono::steady_clock::now() + o.wait_for_review;
    while (pending_needed() > 0 && std::chrono::steady_clock::now() < deadline && !cancelled(o)) {
      std::this_thread::sleep_for(o.review_poll);
      queue.reload();
    }
  }

  // ---- Stage III --------------------------------------------------------
  std::unordered_map<std::string, KnowledgeEntry> approved;
  for (auto& e : queue.export_approved()) approved.emplace(e.class_label, std::move(e));
  state.excluded_classes = queue.exhausted_classes(cfg.max_reretrievals);
  for (const auto& label : state.excluded_classes) {
    summary.report.push_back("excluded from Stage III after " + std::to_string(cfg.max_reretrievals) +
                             " re-retrievals: " + label);
  }

  auto qa = load_qa(qa_path);
  {
    std::vector<const ImageRecord*> pending;
    for (const auto* r : records) {
      if (qa.count(r->id) || !captions.count(r->id)) continue;
      if (!approved.count(r->class_label)) {
        const auto* e = queue.find_by_label(r->class_label);
        if (e != nullptr && e->state == review::EntryState::Rejected &&
            e->reretrievals >= cfg.max_reretrievals) {
          ++summary.images_excluded;
        } else {
          ++summary.images_awaiting_review;
        }
        continue;
      }
      pending.push_back(r);
    }
    if (o.dry_run) {
      summary.report.push_back("stage3: " + std::to_string(pending.size()) + " images ready for QA generation");
      summary.qa_pairs = qa.size() * kQACategories.size();
      state.status = RunStatus::Planned;
      return summary;
    }
    auto& failures = state.failures["stage3"];
    failures.clear();
    std::mutex mutex;
    {
      JsonlAppender out(qa_path);
      parallel_for(pending.size(), o.workers, o, [&](std::size_t i) {
        const auto& r = *pending[i];
        try {
          auto pairs = stage3_generate(r, captions.at(r.id), approved.at(r.class_label), client, cfg);
          std::vector<json> lines;
          for (const auto& p : pairs) {
            auto line = p.to_json();
            line["config_hash"] = o.config_hash;
            lines.push_back(std::move(line));
          }
          for (const auto& line : lines) out.append(line);
          std::lock_guard lock(mutex);
          qa.emplace(r.id, std::move(lines));
        } catch (const Error& e) {
          if (e.code() != Errc::EndpointError && e.code() != Errc::ValidationFailed) throw;
          std::lock_guard lock(mutex);
          failures[r.id] = failure_reason(e);
        }
      });
    }
    state.cursors["stage3"].clear();
    for (const auto& [id, lines] : qa) state.cursors["stage3"].push_back(id);
    if (cancelled(o)) return finish_interrupted("stage3");

    std::vector<std::pair<std::string, std::string>> keyed;
    keyed.reserve(qa.size() * kQACategories.size());
    for (const auto& [id, lines] : qa) {
      for (const auto& line : lines) keyed.emplace_back(qa_sort_key(line), to_jsonl_line(line));
    }
    summary.qa_pairs = keyed.size();
    write_sorted_lines(qa_path, std::move(keyed));
  }

  for (auto& [stage, items] : state.failures) {
    for (const auto& [id, reason] : items) summary.report.push_back(stage + " failed for " + id + ": " + reason);
  }
  state.status = summary.images_awaiting_review > 0 ? RunStatus::AwaitingReview : RunStatus::Complete;
  save_state(o.workdir, state);
  return summary;
}

std::vector<std::string> audit_gate(const fs::path& workdir, const corpus::CorpusManifest& manifest) {
  std::vector<std::string> violations;
  review::ReviewQueue queue(workdir);
  std::unordered_map<std::string, std::string> label_of;
  for (const auto& r : manifest.records) label_of[r.id] = r.class_label;
  const auto qa_path = workdir / kQaFile;
  if (!fs::exists(qa_path)) return violations;
  for_each_jsonl(qa_path, [&](const json& v, std::size_t line_no) {
    const auto qa = QAPair::from_json(v);
    auto it = label_of.find(qa.image_id);
    if (it == label_of.end()) {
      violations.push_back("line " + std::to_string(line_no) + ": image " + qa.image_id + " not in manifest");
      return;
    }
    const auto* entry = queue.find_by_label(it->second);
    if (entry == nullptr || !entry->is_exportable()) {
      violations.push_back("line " + std::to_string(line_no) + ": class '" + it->second + "' is not verified");
    } else if (entry->content_hash() != qa.provenance.knowledge_hash) {
      violations.push_back("line " + std::to_string(line_no) + ": knowledge hash does not match verified text for '" +
                           it->second + "'");
    }
  });
  return violations;
}

}  // namespace agrimm::synthesis
