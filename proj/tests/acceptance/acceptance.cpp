// Prints one PASS/FAIL line per acceptance criterion; exits non-zero when
// any criterion fails.

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/common/rng.hpp"
#include "agrimm/corpus/corpus.hpp"
#include "agrimm/corpus/split.hpp"
#include "agrimm/judge/judge.hpp"
#include "agrimm/metrics/lexical.hpp"
#include "agrimm/modelmath/layers.hpp"
#include "agrimm/modelmath/vision.hpp"
#include "agrimm/review/knowledge.hpp"
#include "agrimm/synthesis/pipeline.hpp"
#include "agrimm/synthesis/prompts.hpp"
#include "agrimm/synthesis/stages.hpp"
#include "agrimm/synthesis/synthetic_chat.hpp"

#include "judge_cases.hpp"
#include "metric_oracles.hpp"
#include "modelmath_oracles.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace agrimm;
namespace fs = std::filesystem;
using corpus::Component;
using corpus::CorpusManifest;
using corpus::ImageRecord;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("agrimm_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t jsonl_lines(const fs::path& path) {
  std::size_t n = 0;
  for_each_jsonl(path, [&](const json&, std::size_t) { ++n; });
  return n;
}

synthesis::PipelineOptions mock_options(const fs::path& dir) {
  synthesis::PipelineOptions o;
  o.workdir = dir;
  o.config_hash = "acce0000000000aa";
  o.workers = 1;
  o.auto_approve = true;
  o.cfg.backoff_base = std::chrono::milliseconds(0);
  o.clock = [] { return std::string("2025-01-01T00:00:00Z"); };
  return o;
}

// Stub manifests with the three component sizes of the full corpus:
// 2,956 species, 110 disease conditions and 33 counted crops.
std::vector<fs::path> write_component_manifests(const fs::path& dir) {
  struct Part {
    std::string file;
    std::string component;
    std::size_t images;
    std::size_t classes;
    std::string prefix;
  };
  const std::vector<Part> parts = {{"finegrained.jsonl", "FineGrained", 48580, 2956, "species"},
                                   {"disease.jsonl", "Disease", 49348, 110, "blight"},
                                   {"counting.jsonl", "Counting", 23497, 33, "crop head"}};
  std::vector<fs::path> paths;
  for (const auto& p : parts) {
    std::ofstream out(dir / p.file);
    for (std::size_t i = 0; i < p.images; ++i) {
      json rec{{"id", p.component + "_" + std::to_string(i)},
               {"source_dataset", p.component + "_src" + std::to_string(i % 7)},
               {"image_path", p.component + "/" + std::to_string(i) + ".jpg"},
               {"class_label", p.prefix + " " + std::to_string(i % p.classes)},
               {"component", p.component}};
      if (p.component == "Counting") rec["annotation_count"] = 1 + i % 90;
      out << rec.dump() << '\n';
    }
    paths.push_back(dir / p.file);
  }
  return paths;
}

Outcome component_accounting() {
  const auto dir = scratch("components");
  const auto paths = write_component_manifests(dir);
  const auto manifest = corpus::ingest_manifest(paths);
  const auto stats = corpus::corpus_stats(manifest);
  const auto fg = stats.per_component.at(Component::FineGrained);
  const auto dis = stats.per_component.at(Component::Disease);
  const auto cnt = stats.per_component.at(Component::Counting);
  const bool ok = stats.total_images == 121425 && fg == 48580 && dis == 49348 && cnt == 23497 &&
                  fg + dis + cnt == stats.total_images;
  return {ok, fmt("%llu + %llu + %llu = %llu (expected 121425)", (unsigned long long)fg, (unsigned long long)dis,
                  (unsigned long long)cnt, (unsigned long long)stats.total_images)};
}

Outcome qa_multiplicity() {
  const auto dir = scratch("multiplicity");
  const auto paths = write_component_manifests(scratch("multiplicity_manifests"));
  const auto manifest = corpus::ingest_manifest(paths);
  const auto start = Clock::now();
  synthesis::SyntheticChatClient client;
  const auto summary = synthesis::run_pipeline(manifest, client, mock_options(dir));
  const double elapsed = seconds_since(start);
  const auto lines = jsonl_lines(dir / synthesis::kQaFile);
  const bool ok = manifest.records.size() == 121425 && lines == 607125 && summary.qa_pairs == 607125 &&
                  summary.state.status == synthesis::RunStatus::Complete && elapsed < 300.0;
  return {ok, fmt("%zu images -> %zu QA pairs (expected 607125) in %.1f s (limit 300 s)", manifest.records.size(),
                  lines, elapsed)};
}

Outcome token_budget() {
  using namespace modelmath;
  const auto worked = token_budget(Grid{4, 4}, 729, 8748);
  Xorshift64Star rng(20250101);
  std::int64_t worst = 0;
  std::size_t checked = 0;
  auto check = [&](std::int64_t w, std::int64_t h) {
    const auto plan = plan_vision(w, h);
    worst = std::max(worst, plan.budget.pooled_total);
    ++checked;
  };
  for (int i = 0; i < 20000; ++i) check(1 + static_cast<std::int64_t>(rng.below(4096)), 1 + static_cast<std::int64_t>(rng.below(4096)));
  for (std::int64_t w : {1, 383, 384, 385, 767, 768, 1536, 4095, 4096})
    for (std::int64_t h : {1, 383, 384, 385, 767, 768, 1536, 4095, 4096}) check(w, h);
  const bool ok = worst <= 8748 && worked.pooled_total == 8473;
  return {ok, fmt("max pooled_total %lld <= 8748 over %zu images; grid (4,4) -> %lld (expected 8473)", (long long)worst,
                  checked, (long long)worked.pooled_total)};
}

Outcome lora_identity() {
  using namespace modelmath;
  Xorshift64Star rng(4242);
  std::size_t exact = 0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(6), din = 1 + rng.below(32), dout = 1 + rng.below(32), r = 1 + rng.below(16);
    const auto x = gaussian_matrix(n, din, 3 * trial + 1);
    const auto w0 = gaussian_matrix(din, dout, 3 * trial + 2);
    const auto adapter = make_lora(w0, r, 2.0 * static_cast<double>(r), 3 * trial + 3);
    const auto y = lora_forward(x, adapter);
    bool same = y.rows == n && y.cols == dout;
    for (std::size_t i = 0; same && i < n; ++i) {
      const std::vector<double> row(x.data.begin() + static_cast<std::ptrdiff_t>(i * din),
                                    x.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * din));
      const auto expected = oracle::row_times(row, w0.data, dout);
      for (std::size_t j = 0; j < dout; ++j) same = same && y(i, j) == expected[j];
    }
    exact += same;
  }
  const double s1 = make_lora(Matrix(4, 4), 128, 256, 1).scale();
  const double s2 = make_lora(Matrix(4, 4), 32, 64, 1).scale();
  const bool ok = exact == 1000 && s1 == 2.0 && s2 == 2.0;
  return {ok, fmt("%zu/1000 exact; alpha/r = %g (r=128, alpha=256), %g (r=32, alpha=64)", exact, s1, s2)};
}

Outcome metric_oracles() {
  using metrics::TokenSeq;
  const auto seq = [](const oracle::Words& w) { return TokenSeq{w, ""}; };
  const auto porter = [](const std::string& w) { return metrics::porter_stem(w); };
  oracle::WordSource src(7);
  double worst_bleu = 0, worst_rouge = 0, worst_meteor = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenSeq> cands, refs;
    std::vector<oracle::Words> oc, orf;
    const std::size_t n = 1 + src.next() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      oc.push_back(src.sentence(3, 14));
      orf.push_back(src.sentence(3, 14));
      cands.push_back(seq(oc.back()));
      refs.push_back(seq(orf.back()));
    }
    worst_bleu = std::max(worst_bleu, std::abs(metrics::bleu4(cands, refs).value - oracle::bleu4(oc, orf)));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = src.sentence(0, 15), r = src.sentence(0, 15);
    worst_rouge = std::max(worst_rouge, std::abs(metrics::rouge2(seq(c), seq(r)).value - oracle::rouge2(c, r)));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = src.sentence(1, 15), r = src.sentence(1, 15);
    worst_meteor =
        std::max(worst_meteor, std::abs(metrics::meteor_lite(seq(c), seq(r)).value - oracle::meteor(c, r, porter)));
  }

  // Identity: BLEU and ROUGE-2 are 1; METEOR is 1 - 0.5 / m^3 (one chunk).
  bool identity = true;
  for (std::size_t m : {2u, 4u, 8u}) {
    oracle::Words w;
    for (std::size_t i = 0; i < m; ++i) w.push_back("w" + std::to_string(i));
    const std::vector<TokenSeq> one{seq(w)};
    identity = identity && metrics::bleu4(one, one).value == (m >= 4 ? 1.0 : 0.0);
    identity = identity && metrics::rouge2(seq(w), seq(w)).value == 1.0;
    const double md = static_cast<double>(m);
    identity = identity && metrics::meteor_lite(seq(w), seq(w)).value == 1.0 - 0.5 / (md * md * md);
  }
  const bool ok = worst_bleu <= 1e-9 && worst_rouge <= 1e-9 && worst_meteor <= 1e-9 && identity;
  return {ok, fmt("max |delta| BLEU-4 %.2e, ROUGE-2 %.2e, METEOR %.2e over 50 cases each (limit 1e-9); identity %s",
                  worst_bleu, worst_rouge, worst_meteor, identity ? "exact" : "MISMATCH")};
}

Outcome masked_loss() {
  using modelmath::masked_ce_loss;
  const std::vector<double> lp{std::log(0.5), std::log(0.5), std::log(0.25)};
  const double ln8 = masked_ce_loss(lp, std::vector<int>{0, 1, 1});
  const double err = std::abs(ln8 - std::log(8.0));

  Xorshift64Star rng(99);
  std::size_t linear = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    std::vector<double> logp(n);
    std::vector<int> m1(n, 0), m2(n, 0), both(n, 0);
    for (std::size_t t = 0; t < n; ++t) {
      logp[t] = -8.0 * rng.unit();
      switch (rng.below(3)) {
        case 0: m1[t] = both[t] = 1; break;
        case 1: m2[t] = both[t] = 1; break;
        default: break;
      }
    }
    const double sum = masked_ce_loss(logp, m1) + masked_ce_loss(logp, m2);
    linear += std::abs(sum - masked_ce_loss(logp, both)) <= 1e-12 * std::max(1.0, sum);
  }
  const bool ok = err <= 1e-12 && linear == 200;
  return {ok, fmt("ln 8 case |delta| = %.2e (limit 1e-12); linearity %zu/200 disjoint mask pairs", err, linear)};
}

Outcome judge_harness() {
  const std::vector<int> scores{4, 4, 3};
  const double direct = judge::normalize_scores(scores);

  std::vector<metrics::EvalItem> items;
  for (int i = 0; i < 3; ++i) items.push_back({"q" + std::to_string(i), "Which crop?", "Maize.", "Corn."});
  std::size_t next = 0;
  synthesis::CallbackChatClient client([&](const synthesis::ChatRequest&) {
    const int s = scores[next++ % 3];
    return synthesis::ChatResponse{"Verdict:\n```json\n{\"score\": " + std::to_string(s) +
                                       ", \"justification\": \"graded\"}\n```",
                                   {}};
  });
  judge::JudgeConfig cfg;
  cfg.concurrency = 1;
  cfg.backoff_base = std::chrono::milliseconds(0);
  const auto report = judge::judge_run(items, client, cfg);

  std::size_t passed = 0;
  const auto suite = judge_cases::robustness_suite();
  for (const auto& c : suite) {
    try {
      const auto v = judge::parse_verdict(c.raw);
      passed += c.score.has_value() && v.score == *c.score;
    } catch (const Error& e) {
      passed += !c.score.has_value() && e.code() == c.error;
    }
  }
  const bool ok = direct == 88.89 && report.normalized_pct == 88.89 && passed == suite.size();
  return {ok, fmt("[4,4,3] -> %.2f (run %.2f, expected 88.89); robustness %zu/%zu", direct,
                  report.normalized_pct.value_or(-1.0), passed, suite.size())};
}

std::string slurp_dir(const fs::path& dir) {
  return read_text_file(dir / "train_ids.txt") + "|" + read_text_file(dir / "test_ids.txt") + "|" +
         read_text_file(dir / "split.json");
}

Outcome split_properties() {
  CorpusManifest m;
  std::map<std::string, std::size_t> per_class;
  Xorshift64Star rng(31337);
  for (std::size_t i = 0; i < 10000; ++i) {
    ImageRecord r;
    r.id = "rec" + std::to_string(i);
    // Skewed class sizes, including classes too small to stand alone.
    const auto k = rng.below(100) < 97 ? rng.below(120) : 120 + rng.below(400);
    r.class_label = "class " + std::to_string(k);
    r.source_dataset = "src";
    r.image_path = r.id + ".jpg";
    ++per_class[r.class_label];
    m.records.push_back(std::move(r));
  }
  const auto start = Clock::now();
  const auto a = corpus::split_corpus(m, 0.8, 2025);
  const auto b = corpus::split_corpus(m, 0.8, 2025);
  const auto da = scratch("split_a"), db = scratch("split_b");
  corpus::write_split(da, a, 0.8, 2025);
  corpus::write_split(db, b, 0.8, 2025);
  const double elapsed = seconds_since(start);
  const bool identical = slurp_dir(da) == slurp_dir(db);

  std::set<std::string> train(a.train.begin(), a.train.end());
  std::size_t overlap = 0;
  for (const auto& id : a.test) overlap += train.count(id);
  const bool covers = a.train.size() + a.test.size() == 10000 && overlap == 0;

  std::map<std::string, std::string> label_of;
  for (const auto& r : m.records) label_of[r.id] = r.class_label;
  std::map<std::string, std::size_t> train_per;
  for (const auto& id : a.train) {
    const auto& label = label_of[id];
    ++train_per[per_class[label] >= corpus::kMinStratumSize ? label : std::string("<pooled>")];
  }
  std::map<std::string, std::size_t> size_per;
  for (const auto& [label, n] : per_class) size_per[n >= corpus::kMinStratumSize ? label : "<pooled>"] += n;
  std::size_t off = 0;
  for (const auto& [stratum, n] : size_per) {
    const double target = 0.8 * static_cast<double>(n);
    off += std::abs(static_cast<double>(train_per[stratum]) - target) > 1.0;
  }
  const bool ok = identical && covers && off == 0 && elapsed < 10.0;
  return {ok, fmt("byte-identical %s; %zu train + %zu test, %zu shared; %zu/%zu strata off by >1; %.2f s (limit 10 s)",
                  identical ? "yes" : "NO", a.train.size(), a.test.size(), overlap, off, size_per.size(), elapsed)};
}

class InterruptingClient final : public synthesis::ChatClient {
 public:
  InterruptingClient(std::atomic<bool>& cancel, std::size_t limit) : cancel_(cancel), limit_(limit) {}
  synthesis::ChatResponse complete(const synthesis::ChatRequest& request) override {
    if (++calls_ >= limit_) cancel_.store(true);
    return inner_.complete(request);
  }

 private:
  synthesis::SyntheticChatClient inner_;
  std::atomic<bool>& cancel_;
  std::size_t limit_;
  std::atomic<std::size_t> calls_{0};
};

Outcome resumability() {
  CorpusManifest m;
  const std::vector<std::string> labels = {"Zea mays", "Oryza sativa", "Tomato late blight", "wheat head",
                                           "Malus domestica", "Coffee leaf rust", "Glycine max"};
  for (std::size_t i = 0; i < 50; ++i) {
    ImageRecord r;
    r.id = "item" + std::to_string(100 + i);
    r.class_label = labels[i % labels.size()];
    r.source_dataset = "src";
    r.image_path = r.id + ".jpg";
    if (r.class_label.find("blight") != std::string::npos || r.class_label.find("rust") != std::string::npos)
      r.component = Component::Disease;
    if (r.class_label == "wheat head") {
      r.component = Component::Counting;
      r.annotation_count = 5 + i;
    }
    m.records.push_back(r);
  }
  const auto reference = scratch("resume_reference");
  synthesis::SyntheticChatClient client;
  synthesis::run_pipeline(m, client, mock_options(reference));

  // 50 Stage I calls, then 1-2 Stage II batches, then 50 Stage III calls.
  std::size_t matched = 0, runs = 0;
  for (std::size_t limit : {1u, 25u, 50u, 51u, 53u, 80u, 102u}) {
    ++runs;
    const auto dir = scratch("resume_" + std::to_string(limit));
    std::atomic<bool> cancel{false};
    InterruptingClient interrupting(cancel, limit);
    auto o = mock_options(dir);
    o.cancel = &cancel;
    const auto first = synthesis::run_pipeline(m, interrupting, o);
    synthesis::run_pipeline(m, client, mock_options(dir));
    bool same = first.state.status == synthesis::RunStatus::Interrupted;
    for (const auto name : {synthesis::kCaptionsFile, synthesis::kQaFile, std::string_view("knowledge.jsonl"),
                            synthesis::kRunStateFile}) {
      same = same && read_text_file(dir / name) == read_text_file(reference / name);
    }
    matched += same;
  }
  return {matched == runs, fmt("%zu/%zu interrupt points resume byte-identical to the uninterrupted run", matched, runs)};
}

std::string prompt_fixture(const std::string& name) {
  auto text = read_text_file(fs::path(AGRIMM_FIXTURES) / "prompts" / name);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

// True when `rendered` equals `stored` everywhere outside its {identifier}
// slots: every literal run appears in order and the text between runs is
// whatever was substituted.
bool differs_only_at_slots(const std::string& stored, const std::string& rendered, std::size_t& slots) {
  std::vector<std::string> literals{""};
  slots = 0;
  for (std::size_t i = 0; i < stored.size();) {
    if (stored[i] == '{' && i + 1 < stored.size() && (std::isalpha(static_cast<unsigned char>(stored[i + 1])) || stored[i + 1] == '_')) {
      std::size_t j = i + 1;
      while (j < stored.size() && (std::isalnum(static_cast<unsigned char>(stored[j])) || stored[j] == '_')) ++j;
      if (j < stored.size() && stored[j] == '}') {
        literals.emplace_back();
        ++slots;
        i = j + 1;
        continue;
      }
    }
    literals.back() += stored[i++];
  }
  if (rendered.compare(0, literals.front().size(), literals.front()) != 0) return false;
  std::size_t pos = literals.front().size();
  for (std::size_t k = 1; k < literals.size(); ++k) {
    const auto& lit = literals[k];
    std::size_t at;
    if (k + 1 == literals.size()) {
      if (rendered.size() < pos + lit.size()) return false;
      at = rendered.size() - lit.size();
      if (rendered.compare(at, lit.size(), lit) != 0) return false;
    } else {
      at = rendered.find(lit, pos);
      if (at == std::string::npos) return false;
    }
    pos = at + lit.size();
  }
  return pos == rendered.size();
}

Outcome prompt_fidelity() {
  std::vector<std::string> sent;
  synthesis::SyntheticChatClient synthetic;
  synthesis::CallbackChatClient recorder([&](const synthesis::ChatRequest& req) {
    sent.push_back(req.messages.back().content);
    return synthetic.complete(req);
  });
  synthesis::SynthesisConfig cfg;
  cfg.backoff_base = std::chrono::milliseconds(0);

  std::vector<std::pair<std::string, std::string>> checks;  // fixture, prompt
  ImageRecord record;
  record.id = "img1";
  record.class_label = "wheat head";
  record.component = Component::Counting;
  record.annotation_count = 61;
  const auto caption = synthesis::stage1_caption(record, recorder, cfg);
  checks.emplace_back("stage1_caption.txt", sent.front());

  sent.clear();
  const std::vector<std::string> species{"Zea mays", "Oryza sativa"};
  synthesis::stage2_retrieve(species, review::KnowledgeKind::Species, recorder, cfg);
  checks.emplace_back("stage2_species.txt", sent.front());
  sent.clear();
  const std::vector<std::string> diseases{"Tomato late blight"};
  synthesis::stage2_retrieve(diseases, review::KnowledgeKind::Disease, recorder, cfg);
  checks.emplace_back("stage2_disease.txt", sent.front());

  sent.clear();
  auto entry = review::make_entry("wheat head", review::KnowledgeKind::Species,
                                  "Wheat heads are the grain-bearing spikes of Triticum aestivum.");
  entry.state = review::EntryState::Approved;
  synthesis::stage3_generate(record, caption, entry, recorder, cfg);
  checks.emplace_back("stage3_qa.txt", sent.front());

  sent.clear();
  judge::JudgeConfig jcfg;
  jcfg.concurrency = 1;
  jcfg.backoff_base = std::chrono::milliseconds(0);
  judge::judge_run({{"q1", "What crop is shown?", "Wheat.", "It is {wheat}."}}, recorder, jcfg);
  checks.emplace_back("judge.txt", sent.front());

  std::size_t ok = 0;
  std::string failed;
  for (const auto& [file, prompt] : checks) {
    std::size_t slots = 0;
    if (differs_only_at_slots(prompt_fixture(file), prompt, slots) && slots > 0) {
      ++ok;
    } else {
      failed += " " + file;
    }
  }
  return {ok == checks.size(),
          fmt("%zu/%zu stage prompts differ from stored templates only at placeholder spans%s", ok, checks.size(),
              failed.empty() ? "" : (" (failed:" + failed + ")").c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"qa-multiplicity", qa_multiplicity},     {"component-accounting", component_accounting},
      {"token-budget", token_budget},           {"lora-identity", lora_identity},
      {"metric-oracles", metric_oracles},       {"masked-loss", masked_loss},
      {"judge-harness", judge_harness},         {"split", split_properties},
      {"resumability", resumability},           {"prompt-fidelity", prompt_fidelity},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const Error& e) {
      o = {false, std::string("error: ") + e.what()};
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
