#include "agrimm/common/clock.hpp"
#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/corpus/corpus.hpp"
#include "agrimm/corpus/split.hpp"
#include "agrimm/judge/judge.hpp"
#include "agrimm/metrics/eval_set.hpp"
#include "agrimm/modelmath/vision.hpp"
#include "agrimm/review/api.hpp"
#include "agrimm/review/service.hpp"
#include "agrimm/runtime/config.hpp"
#include "agrimm/runtime/report.hpp"
#include "agrimm/synthesis/pipeline.hpp"
#include "agrimm/synthesis/synthetic_chat.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <thread>

namespace fs = std::filesystem;
using namespace agrimm;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Timestamp used for every artifact in mock mode so runs are reproducible.
constexpr const char* kMockTimestamp = "2025-01-01T00:00:00Z";

std::atomic<bool> g_cancel{false};

extern "C" void on_interrupt(int) { g_cancel = true; }

struct Globals {
  std::string config_path;
  std::string workdir;
  bool dry_run = false;
  bool force = false;
  bool auto_approve = false;
  std::optional<std::string> mock;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> split_seed;
  std::optional<double> split_ratio;
  std::optional<std::size_t> workers;
};

runtime::RunConfig load(const Globals& g) {
  runtime::Overrides flags;
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(Errc::ConfigError, s, "--set expects section.key=value");
    flags[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!g.workdir.empty()) flags["paths.workdir"] = '"' + g.workdir + '"';
  if (g.split_seed) flags["split.seed"] = std::to_string(*g.split_seed);
  if (g.split_ratio) flags["split.ratio"] = std::to_string(*g.split_ratio);
  if (g.workers) flags["runtime.concurrency"] = std::to_string(*g.workers);
  return runtime::load_config_file(g.config_path, runtime::process_environment(), flags);
}

std::optional<std::string> secret(const std::string& env_var) {
  if (env_var.empty()) return std::nullopt;
  const char* v = std::getenv(env_var.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

std::unique_ptr<synthesis::ChatClient> chat_client(const Globals& g, const runtime::RunConfig& cfg) {
  if (g.mock) {
    std::optional<fs::path> dir;
    if (!g.mock->empty()) dir = *g.mock;
    return std::make_unique<synthesis::SyntheticChatClient>(dir);
  }
  return std::make_unique<synthesis::HttpChatClient>(
      synthesis::HttpEndpoint{cfg.chat_url, secret(cfg.auth_env_var), std::chrono::seconds(120)});
}

Clock artifact_clock(const Globals& g) { return g.mock ? fixed_clock(kMockTimestamp) : system_clock(); }

fs::path default_manifest(const runtime::RunConfig& cfg) { return fs::path(cfg.workdir) / "manifest.jsonl"; }

corpus::CorpusManifest read_manifest(const fs::path& path) {
  const std::vector<fs::path> paths{path};
  return corpus::ingest_manifest(paths);
}

void print_json(const json& value) { std::cout << value.dump(2) << "\n"; }

int run_synth(const Globals& g, const fs::path& manifest_path, bool resume, double wait_review_s) {
  const auto cfg = load(g);
  const auto manifest = read_manifest(manifest_path.empty() ? default_manifest(cfg) : manifest_path);
  if (resume && !synthesis::load_run_state(cfg.workdir)) {
    throw Error(Errc::StateError, cfg.workdir, "no run_state.json to resume from");
  }
  auto client = chat_client(g, cfg);
  synthesis::PipelineOptions opts;
  opts.workdir = cfg.workdir;
  opts.cfg = cfg.synth;
  opts.config_hash = cfg.hash();
  opts.workers = cfg.concurrency;
  opts.auto_approve = g.auto_approve;
  opts.force = g.force;
  opts.dry_run = g.dry_run;
  opts.review_sample_rate = cfg.review_sample_rate;
  opts.wait_for_review = std::chrono::milliseconds(static_cast<std::int64_t>(wait_review_s * 1000.0));
  opts.clock = artifact_clock(g);
  opts.cancel = &g_cancel;
  const auto summary = synthesis::run_pipeline(manifest, *client, opts);
  for (const auto& line : summary.report) std::cerr << line << "\n";
  print_json({{"status", synthesis::to_string(summary.state.status)},
              {"run_id", summary.state.run_id},
              {"config_hash", summary.state.config_hash},
              {"captions", summary.captions},
              {"knowledge_entries", summary.knowledge_entries},
              {"qa_pairs", summary.qa_pairs},
              {"images_awaiting_review", summary.images_awaiting_review},
              {"images_excluded", summary.images_excluded}});
  return summary.state.status == synthesis::RunStatus::Interrupted ? kExitRuntime : 0;
}

int run_review_serve(const Globals& g, const std::string& host, int port, const std::string& token_env) {
  const auto cfg = load(g);
  review::ReviewService service{review::ReviewQueue(cfg.workdir)};
  review::ApiOptions opts;
  opts.bearer_token = secret(token_env);
  review::ReviewServer server(service, opts);
  const int bound = server.bind(host, port);
  std::cerr << "review API listening on http://" << host << ":" << bound << "/api\n";
  server.start();
  while (!g_cancel.load()) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  service.stop();
  return 0;
}

int run_review_export(const Globals& g, const std::string& out) {
  const auto cfg = load(g);
  review::ReviewQueue queue(cfg.workdir);
  std::string text;
  std::size_t n = 0;
  for (const auto& e : queue.export_approved()) {
    text += to_jsonl_line(e.to_json()) + "\n";
    ++n;
  }
  const fs::path path = out.empty() ? fs::path(cfg.workdir) / "knowledge.approved.jsonl" : fs::path(out);
  write_text_file_atomic(path, text);
  std::cerr << "exported " << n << " verified entries to " << path.string() << "\n";
  return 0;
}

runtime::EvalReport open_report(const fs::path& path) {
  if (!fs::exists(path)) return {};
  try {
    return runtime::EvalReport::from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string(), e.what());
  }
}

int run_eval_metrics(const Globals& g, const std::string& input, const std::string& dataset,
                     const std::string& model, const std::string& report_path) {
  const auto cfg = load(g);
  const auto items = metrics::read_eval_set(input);
  std::vector<std::unique_ptr<metrics::EmbeddingClient>> clients;
  std::vector<metrics::EmbeddingColumn> columns;
  for (const auto& col : cfg.embedding_columns) {
    if (g.mock) {
      clients.push_back(std::make_unique<metrics::HashingEmbeddingClient>());
    } else {
      clients.push_back(std::make_unique<metrics::HttpEmbeddingClient>(metrics::EmbeddingEndpoint{
          cfg.embed_url, col.model, secret(cfg.embed_auth_env_var), std::chrono::seconds(120)}));
    }
    columns.push_back({col.name, clients.back().get(), col.token_level});
  }
  metrics::EmbedConfig ecfg;
  ecfg.batch_size = cfg.embed_batch;
  ecfg.max_retries = cfg.synth.max_retries;
  ecfg.backoff_base = cfg.synth.backoff_base;
  ecfg.concurrency = cfg.concurrency;

  const fs::path path = report_path.empty() ? fs::path(cfg.workdir) / "eval_report.json" : fs::path(report_path);
  auto report = open_report(path);
  runtime::ModelResult result;
  try {
    result.metrics = metrics::evaluate_metrics(items, columns, ecfg);
  } catch (const Error& e) {
    if (e.code() != Errc::EndpointError && e.code() != Errc::DimensionDrift) throw;
    result.failure = e.what();
  }
  report.results[dataset][model] = result;
  report.config_hash = cfg.hash();
  report.generated_at = artifact_clock(g)();
  runtime::emit_report(report, runtime::ReportFormat::Json, path);
  print_json(report.to_json()["results"][dataset][model]);
  return result.failure ? kExitRuntime : 0;
}

int run_eval_judge(const Globals& g, const std::string& input, const std::string& dataset, const std::string& model,
                   const std::string& out, const std::string& report_path) {
  const auto cfg = load(g);
  const auto items = metrics::read_eval_set(input);
  auto client = chat_client(g, cfg);
  const auto jr = judge::judge_run(items, *client, cfg.judge, cfg.hash());
  const fs::path judge_path = out.empty() ? fs::path(cfg.workdir) / "judge_report.json" : fs::path(out);
  if (judge_path.has_parent_path()) fs::create_directories(judge_path.parent_path());
  write_text_file_atomic(judge_path, jr.to_json().dump(2) + "\n");

  const fs::path path = report_path.empty() ? fs::path(cfg.workdir) / "eval_report.json" : fs::path(report_path);
  auto report = open_report(path);
  report.judge[dataset][model] = {jr.mean_score, jr.normalized_pct, jr.failure_count,
                                  std::string(judge::to_string(jr.normalization))};
  report.config_hash = cfg.hash();
  report.generated_at = artifact_clock(g)();
  runtime::emit_report(report, runtime::ReportFormat::Json, path);
  print_json({{"mean_score", jr.mean_score ? json(*jr.mean_score) : json(nullptr)},
              {"normalized_pct", jr.normalized_pct ? json(*jr.normalized_pct) : json(nullptr)},
              {"failure_count", jr.failure_count},
              {"no_valid_verdicts", jr.no_valid_verdicts}});
  return jr.no_valid_verdicts ? kExitRuntime : 0;
}

int run_modelmath_check() {
  using namespace modelmath;
  const auto budget = token_budget({4, 4}, kDefaultGridSide * kDefaultGridSide, kDefaultMaxTokens);
  std::cout << "grid (4,4), N_v=" << budget.tokens_per_tile << ", N_max=" << budget.max_tokens << "\n"
            << "L = (4*4 + 1) * " << budget.tokens_per_tile << " = " << budget.raw_total << "\n"
            << "h' = w' = floor(sqrt((" << budget.max_tokens << " - " << budget.tokens_per_tile << ") / 16)) = "
            << budget.pooled_side.value_or(0) << "\n"
            << "pooled_total = " << budget.tokens_per_tile << " + 16 * " << budget.pooled_side.value_or(0) << "^2 = "
            << budget.pooled_total << "\n";
  const bool ok = budget.raw_total == 12393 && budget.pooled_side == 22 && budget.pooled_total == 8473 &&
                  plan_grid(1344, 1344) == Grid{4, 4} && plan_grid(768, 384) == Grid{1, 2} &&
                  plan_grid(384, 384) == Grid{1, 1};
  std::cout << (ok ? "self-check: ok" : "self-check: FAILED") << "\n";
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agrimm: agricultural instruction-data synthesis, review and evaluation toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Config file (section/key grammar, see README)");
  app.add_option("--workdir", g.workdir, "Working directory for artifacts");
  app.add_flag("--dry-run", g.dry_run, "Plan without calling endpoints or writing artifacts");
  app.add_flag("--force", g.force, "Accept a workdir produced under a different config hash");
  app.add_flag("--auto-approve", g.auto_approve, "Approve every new knowledge entry without review");
  app.add_option("--mock", g.mock, "Use the offline endpoint; optional fixture directory")->expected(0, 1);
  app.add_option("--set", g.sets, "Override a config key: section.key=value");
  app.add_option("--split-seed", g.split_seed, "Split seed");
  app.add_option("--split-ratio", g.split_ratio, "Train fraction");
  app.add_option("--workers", g.workers, "Concurrency width");

  std::vector<std::string> ingest_inputs;
  std::string taxonomy_path;
  auto* ingest = app.add_subcommand("ingest", "Merge source manifests into <workdir>/manifest.jsonl");
  ingest->add_option("manifests", ingest_inputs, "Manifest JSONL files")->required();
  ingest->add_option("--taxonomy", taxonomy_path, "JSON object mapping class labels to categories");

  std::string manifest_path;
  auto* split = app.add_subcommand("split", "Stratified train/test split");
  split->add_option("--manifest", manifest_path, "Merged manifest (default <workdir>/manifest.jsonl)");
  auto* stats = app.add_subcommand("stats", "Component and category counts");
  stats->add_option("--manifest", manifest_path, "Merged manifest (default <workdir>/manifest.jsonl)");

  double wait_review = 0.0;
  auto* synth = app.add_subcommand("synth", "Run the three-stage synthesis pipeline");
  synth->require_subcommand(1);
  auto* synth_run = synth->add_subcommand("run", "Start or continue a run");
  auto* synth_resume = synth->add_subcommand("resume", "Continue an existing run");
  for (auto* sub : {synth_run, synth_resume}) {
    sub->add_option("--manifest", manifest_path, "Merged manifest (default <workdir>/manifest.jsonl)");
    sub->add_option("--wait-review", wait_review, "Seconds to wait for pending reviews before Stage III");
  }

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token_env = "REVIEW_API_TOKEN";
  std::string export_out;
  auto* review_cmd = app.add_subcommand("review", "Knowledge verification");
  review_cmd->require_subcommand(1);
  auto* serve = review_cmd->add_subcommand("serve", "Serve the review HTTP API");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--token-env", token_env, "Env var holding the bearer token (unset = no auth)");
  auto* export_cmd = review_cmd->add_subcommand("export", "Write Approved/Edited entries as JSONL");
  export_cmd->add_option("--out", export_out);

  std::string eval_input;
  std::string dataset = "default";
  std::string model = "model";
  std::string report_path;
  std::string judge_out;
  auto* eval = app.add_subcommand("eval", "Score predictions");
  eval->require_subcommand(1);
  auto* eval_metrics = eval->add_subcommand("metrics", "Lexical and embedding metrics");
  auto* eval_judge = eval->add_subcommand("judge", "LLM-as-a-judge scoring");
  for (auto* sub : {eval_metrics, eval_judge}) {
    sub->add_option("--input", eval_input, "Eval JSONL {id, question, reference|ground_truth, prediction}")
        ->required();
    sub->add_option("--dataset", dataset);
    sub->add_option("--model", model);
    sub->add_option("--report", report_path, "Eval report to update (default <workdir>/eval_report.json)");
  }
  eval_judge->add_option("--out", judge_out, "judge_report.json path");

  std::string report_in;
  std::string report_format = "markdown";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Render an eval report");
  report->add_option("--input", report_in, "Eval report JSON (default <workdir>/eval_report.json)");
  report->add_option("--format", report_format, "json or markdown");
  report->add_option("--out", report_out, "Output file (default stdout)");

  std::int64_t plan_w = 0;
  std::int64_t plan_h = 0;
  std::int64_t plan_tile = modelmath::kDefaultTile;
  std::int64_t plan_max_tiles = modelmath::kDefaultMaxTiles;
  std::int64_t plan_max_tokens = modelmath::kDefaultMaxTokens;
  auto* mm = app.add_subcommand("modelmath", "Vision tiling and token budget kernels");
  mm->require_subcommand(1);
  auto* mm_check = mm->add_subcommand("check", "Print the worked token-budget example and self-check");
  auto* mm_plan = mm->add_subcommand("plan", "Emit the VisionPlan for an image size");
  mm_plan->add_option("--width", plan_w)->required();
  mm_plan->add_option("--height", plan_h)->required();
  mm_plan->add_option("--tile", plan_tile);
  mm_plan->add_option("--max-tiles", plan_max_tiles);
  mm_plan->add_option("--max-tokens", plan_max_tokens);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);

  try {
    if (ingest->parsed()) {
      const auto cfg = load(g);
      corpus::TaxonomyMap taxonomy;
      if (!taxonomy_path.empty()) taxonomy = corpus::TaxonomyMap::from_json(json::parse(read_text_file(taxonomy_path)));
      std::vector<fs::path> paths(ingest_inputs.begin(), ingest_inputs.end());
      const auto manifest = corpus::ingest_manifest(paths, taxonomy);
      for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
      if (!g.dry_run) {
        fs::create_directories(cfg.workdir);
        corpus::write_manifest(default_manifest(cfg), manifest);
      }
      print_json(corpus::corpus_stats(manifest).to_json());
      return 0;
    }
    if (split->parsed()) {
      const auto cfg = load(g);
      const auto manifest = read_manifest(manifest_path.empty() ? default_manifest(cfg) : fs::path(manifest_path));
      const auto result = corpus::split_corpus(manifest, cfg.split_ratio, cfg.split_seed);
      if (!g.dry_run) corpus::write_split(fs::path(cfg.workdir) / "split", result, cfg.split_ratio, cfg.split_seed);
      print_json({{"train", result.train.size()}, {"test", result.test.size()}, {"seed", cfg.split_seed},
                  {"ratio", cfg.split_ratio}});
      return 0;
    }
    if (stats->parsed()) {
      const auto cfg = load(g);
      print_json(corpus::corpus_stats(read_manifest(manifest_path.empty() ? default_manifest(cfg)
                                                                          : fs::path(manifest_path)))
                     .to_json());
      return 0;
    }
    if (synth_run->parsed()) return run_synth(g, manifest_path, false, wait_review);
    if (synth_resume->parsed()) return run_synth(g, manifest_path, true, wait_review);
    if (serve->parsed()) return run_review_serve(g, host, port, token_env);
    if (export_cmd->parsed()) return run_review_export(g, export_out);
    if (eval_metrics->parsed()) return run_eval_metrics(g, eval_input, dataset, model, report_path);
    if (eval_judge->parsed()) return run_eval_judge(g, eval_input, dataset, model, judge_out, report_path);
    if (report->parsed()) {
      const auto cfg = load(g);
      const fs::path in = report_in.empty() ? fs::path(cfg.workdir) / "eval_report.json" : fs::path(report_in);
      if (!fs::exists(in)) throw Error(Errc::IoError, in.string(), "no eval report");
      const auto r = open_report(in);
      const auto format = runtime::parse_report_format(report_format);
      if (report_out.empty()) {
        std::cout << (format == runtime::ReportFormat::Json ? runtime::render_json(r) : runtime::render_markdown(r));
      } else {
        runtime::emit_report(r, format, report_out);
      }
      return 0;
    }
    if (mm_check->parsed()) return run_modelmath_check();
    if (mm_plan->parsed()) {
      print_json(modelmath::plan_vision(plan_w, plan_h, plan_tile, plan_max_tiles, modelmath::kDefaultGridSide,
                                        plan_max_tokens)
                     .to_json());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitUsage;
}
