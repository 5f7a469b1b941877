#include "agrimm/synthesis/stages.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/hash.hpp"
#include "agrimm/common/rng.hpp"
#include "agrimm/corpus/corpus.hpp"
#include "agrimm/synthesis/json_extract.hpp"
#include "agrimm/synthesis/prompts.hpp"
#include "agrimm/synthesis/text_checks.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>

namespace agrimm::synthesis {

using nlohmann::json;
using corpus::Component;
using corpus::ImageRecord;
using review::KnowledgeEntry;
using review::KnowledgeKind;

namespace {

std::string squash(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

void backoff(const SynthesisConfig& cfg, int attempt) {
  if (attempt <= 0 || cfg.backoff_base.count() <= 0) return;
  std::this_thread::sleep_for(cfg.backoff_base * (1LL << std::min(attempt - 1, 10)));
}

ChatRequest make_request(const std::string& model, std::string prompt, double temperature, int max_tokens) {
  ChatRequest req;
  req.model = model;
  req.messages.push_back({"user", std::move(prompt)});
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  return req;
}

std::string json_string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

// Stage II responses: {"label": "text", ...}; an array of such objects is
// merged. Anything else is a shape error.
std::map<std::string, std::string> parse_knowledge_map(std::string_view content) {
  json value = extract_json(content);
  std::map<std::string, std::string> out;
  auto absorb = [&](const json& obj) {
    for (const auto& [key, text] : obj.items()) {
      if (!text.is_string()) throw Error(Errc::JsonShapeError, key, "description must be a string");
      out[key] = text.get<std::string>();
    }
  };
  if (value.is_object()) {
    absorb(value);
  } else if (value.is_array() && std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_object(); })) {
    for (const auto& obj : value) absorb(obj);
  } else {
    throw Error(Errc::JsonShapeError, "", "expected an object mapping class name to description");
  }
  return out;
}

const std::string* lookup_label(const std::map<std::string, std::string>& found, const std::string& label) {
  if (auto it = found.find(label); it != found.end()) return &it->second;
  const auto key = corpus::normalize_label(label);
  for (const auto& [name, text] : found) {
    if (corpus::normalize_label(name) == key) return &text;
  }
  return nullptr;
}

}  // namespace

double retry_temperature(double base, int attempt, std::string_view item_key, std::string_view seed_material) {
  if (attempt <= 0) return base;
  std::string material(seed_material);
  material += '\x1f';
  material += item_key;
  material += '\x1f';
  material += std::to_string(attempt);
  const auto digest = sha256_hex(material);
  Xorshift64Star rng(std::stoull(digest.substr(0, 16), nullptr, 16));
  const double t = base - 0.1 + 0.4 * rng.unit();
  return std::clamp(t, 0.0, 1.5);
}

json Caption::to_json() const {
  json out{{"image_id", image_id},
           {"text", text},
           {"injected_label", injected_label},
           {"model_id", model_id},
           {"created_at", created_at},
           {"attempts", attempts}};
  if (!warnings.empty()) out["warnings"] = warnings;
  return out;
}

Caption Caption::from_json(const json& value) {
  Caption c;
  c.image_id = json_string_field(value, "image_id");
  c.text = json_string_field(value, "text");
  c.injected_label = json_string_field(value, "injected_label");
  c.model_id = json_string_field(value, "model_id");
  c.created_at = json_string_field(value, "created_at");
  c.attempts = value.value("attempts", 1);
  if (auto it = value.find("warnings"); it != value.end() && it->is_array()) {
    for (const auto& w : *it) {
      if (w.is_string()) c.warnings.push_back(w.get<std::string>());
    }
  }
  if (c.image_id.empty() || c.text.empty()) throw Error(Errc::ParseError, "caption", "missing image_id or text");
  return c;
}

std::string_view to_string(QACategory c) {
  switch (c) {
    case QACategory::Identification: return "Identification";
    case QACategory::VisualReasoning: return "VisualReasoning";
    case QACategory::HealthCondition: return "HealthCondition";
    case QACategory::CultivationKnowledge: return "CultivationKnowledge";
    case QACategory::Quantification: return "Quantification";
  }
  return "Identification";
}

std::optional<QACategory> parse_qa_category(std::string_view text) {
  const auto key = squash(text);
  if (key == "identification") return QACategory::Identification;
  if (key == "visualreasoning") return QACategory::VisualReasoning;
  if (key == "healthcondition" || key == "conditionhealth" || key == "health") return QACategory::HealthCondition;
  if (key == "cultivationknowledge" || key == "cultivation") return QACategory::CultivationKnowledge;
  if (key == "quantification" || key == "anatomydetail") return QACategory::Quantification;
  return std::nullopt;
}

json QAPair::to_json() const {
  return json{{"image_id", image_id},
              {"question", question},
              {"answer", answer},
              {"category", to_string(category)},
              {"provenance",
               {{"caption_hash", provenance.caption_hash},
                {"knowledge_hash", provenance.knowledge_hash},
                {"prompt_hash", provenance.prompt_hash}}}};
}

QAPair QAPair::from_json(const json& value) {
  QAPair qa;
  qa.image_id = json_string_field(value, "image_id");
  qa.question = json_string_field(value, "question");
  qa.answer = json_string_field(value, "answer");
  auto category = parse_qa_category(json_string_field(value, "category"));
  if (qa.image_id.empty() || !category) throw Error(Errc::ParseError, "qa", "missing image_id or category");
  qa.category = *category;
  if (auto it = value.find("provenance"); it != value.end() && it->is_object()) {
    qa.provenance.caption_hash = json_string_field(*it, "caption_hash");
    qa.provenance.knowledge_hash = json_string_field(*it, "knowledge_hash");
    qa.provenance.prompt_hash = json_string_field(*it, "prompt_hash");
  }
  return qa;
}

std::string caption_extra_details(const ImageRecord& record) {
  if (record.annotation_count) {
    return record.class_label + " (the image contains " + std::to_string(*record.annotation_count) + " " +
           record.class_label + ")";
  }
  return record.class_label;
}

std::string stage3_class_info(const ImageRecord& record, const KnowledgeEntry& knowledge) {
  std::string info = record.class_label + ": " + knowledge.exported_text();
  if (record.annotation_count) {
    info += " Ground-truth count: the image contains " + std::to_string(*record.annotation_count) + " " +
            record.class_label + ".";
  }
  return info;
}

std::optional<std::string> validate_caption(std::string_view text) {
  if (blank(text)) return "empty caption";
  const auto n = split_sentences(text).size();
  if (n < 3 || n > 5) return "sentence count " + std::to_string(n) + " outside [3,5]";
  return std::nullopt;
}

Caption stage1_caption(const ImageRecord& record, ChatClient& client, const SynthesisConfig& cfg,
                       const Clock& clock) {
  const auto prompt = render_prompt(builtin_template(PromptName::Stage1Caption),
                                    {{"extra_details", caption_extra_details(record)}});
  const int attempts = std::max(1, cfg.max_retries);
  std::optional<Error> last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    backoff(cfg, attempt);
    auto req = make_request(cfg.caption_model, prompt,
                            retry_temperature(cfg.caption_temperature, attempt, record.id, cfg.seed_material),
                            cfg.caption_max_tokens);
    if (cfg.attach_image) req.image_url = record.image_path;
    ChatResponse resp;
    try {
      resp = client.complete(req);
    } catch (const Error& e) {
      if (e.code() != Errc::EndpointError) throw;
      last = e;
      continue;
    }
    if (auto reason = validate_caption(resp.content)) {
      last = Error(Errc::ValidationFailed, blank(resp.content) ? "empty" : "sentence count", *reason)
                 .with_raw(resp.content);
      continue;
    }
    Caption caption;
    caption.image_id = record.id;
    caption.text = resp.content;
    caption.injected_label = record.class_label;
    caption.model_id = cfg.caption_model;
    caption.created_at = clock();
    caption.attempts = attempt + 1;
    if (corpus::normalize_label(resp.content).find(corpus::normalize_label(record.class_label)) ==
        std::string::npos) {
      caption.warnings.push_back("caption does not mention injected label");
    }
    return caption;
  }
  throw *last;
}

std::string stage2_prompt(std::span<const std::string> class_batch, KnowledgeKind kind, const CorrectiveNotes& notes) {
  const json names(std::vector<std::string>(class_batch.begin(), class_batch.end()));
  std::string prompt = kind == KnowledgeKind::Species
                           ? render_prompt(builtin_template(PromptName::Stage2Species), {{"class_names", names.dump()}})
                           : render_prompt(builtin_template(PromptName::Stage2Disease),
                                           {{"disease_class_names", names.dump()}});
  for (const auto& label : class_batch) {
    if (auto it = notes.find(label); it != notes.end() && !it->second.empty()) {
      prompt += "\n\nReviewer correction for " + label + ": " + it->second;
    }
  }
  return prompt;
}

std::vector<KnowledgeEntry> stage2_retrieve(std::span<const std::string> class_batch, KnowledgeKind kind,
                                            ChatClient& client, const SynthesisConfig& cfg,
                                            const CorrectiveNotes& notes) {
  if (class_batch.empty()) throw Error(Errc::EmptyInput, "class_batch");
  if (class_batch.size() > std::max<std::size_t>(1, cfg.stage2_batch)) {
    throw Error(Errc::OutOfRange, "class_batch", "batch larger than stage2_batch");
  }
  const int attempts = std::max(1, cfg.max_retries);
  auto in_range = [&](const std::string& text) {
    const auto n = word_count(text);
    return n >= cfg.min_words && n <= cfg.max_words;
  };

  struct Found {
    std::string text;
    std::vector<std::string> citations;
  };
  std::map<std::string, Found> accepted;

  auto retriable = [](Errc code) {
    return code == Errc::EndpointError || code == Errc::JsonShapeError || code == Errc::NoJsonFound ||
           code == Errc::StrictParseError;
  };
  // One request; accepted descriptions are recorded, failures rethrown.
  auto request_once = [&](std::span<const std::string> labels, const std::string& key, int attempt) {
    backoff(cfg, attempt);
    auto req = make_request(cfg.knowledge_model, stage2_prompt(labels, kind, notes),
                            retry_temperature(cfg.knowledge_temperature, attempt, key, cfg.seed_material),
                            cfg.knowledge_max_tokens);
    auto resp = client.complete(req);
    auto found = parse_knowledge_map(resp.content);
    for (const auto& label : labels) {
      const std::string* text = lookup_label(found, label);
      if (text != nullptr && in_range(*text) && accepted.count(label) == 0) {
        accepted[label] = {*text, resp.citations};
      }
    }
  };

  {
    std::optional<Error> last;
    bool answered = false;
    for (int attempt = 0; attempt < attempts && !answered; ++attempt) {
      try {
        request_once(class_batch, class_batch.front(), attempt);
        answered = true;
      } catch (const Error& e) {
        if (!retriable(e.code())) throw;
        last = e;
      }
    }
    if (!answered) throw *last;
  }

  std::vector<std::string> missing;
  for (const auto& label : class_batch) {
    if (accepted.count(label)) continue;
    std::optional<Error> last;
    bool answered = false;
    for (int attempt = 0; attempt < attempts && accepted.count(label) == 0; ++attempt) {
      try {
        request_once(std::span(&label, 1), label + "#single", attempt);
        answered = true;
      } catch (const Error& e) {
        if (!retriable(e.code())) throw;
        last = e;
      }
    }
    if (accepted.count(label)) continue;
    if (!answered && last && last->code() == Errc::EndpointError) throw *last;
    missing.push_back(label);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(Errc::MissingClass, names, "no in-range description after retries");
  }

  std::vector<KnowledgeEntry> out;
  for (const auto& label : class_batch) {
    auto& f = accepted.at(label);
    auto entry = review::make_entry(label, kind, f.text, f.citations);
    entry.config_hash = cfg.seed_material;
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<QAPair> parse_qa_response(std::string_view text, const ImageRecord& record) {
  json value = extract_json(text);
  if (!value.is_array()) throw Error(Errc::ValidationFailed, "shape", "expected a JSON array");
  if (value.size() != 5) throw Error(Errc::ValidationFailed, "count=" + std::to_string(value.size()));

  std::vector<QAPair> pairs;
  std::set<QACategory> seen;
  for (const auto& obj : value) {
    if (!obj.is_object()) throw Error(Errc::ValidationFailed, "shape", "array element is not an object");
    QAPair qa;
    qa.image_id = record.id;
    qa.question = json_string_field(obj, "question");
    qa.answer = json_string_field(obj, "answer");
    if (blank(qa.question) || blank(qa.answer)) throw Error(Errc::ValidationFailed, "empty question or answer");
    auto category = parse_qa_category(json_string_field(obj, "category"));
    if (!category) {
      throw Error(Errc::ValidationFailed, "category", "unknown category " + obj.value("category", json()).dump());
    }
    if (!seen.insert(*category).second) throw Error(Errc::ValidationFailed, "category set", "duplicate category");
    qa.category = *category;
    pairs.push_back(std::move(qa));
  }
  if (record.annotation_count) {
    for (const auto& qa : pairs) {
      if (qa.category == QACategory::Quantification && !contains_number(qa.answer, *record.annotation_count)) {
        throw Error(Errc::ValidationFailed, "quantification count",
                    "answer lacks ground-truth count " + std::to_string(*record.annotation_count));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const QAPair& a, const QAPair& b) { return a.category < b.category; });
  return pairs;
}

std::vector<QAPair> stage3_generate(const ImageRecord& record, const Caption& caption, const KnowledgeEntry& knowledge,
                                    ChatClient& client, const SynthesisConfig& cfg) {
  if (!knowledge.is_exportable()) {
    throw Error(Errc::StateError, knowledge.class_label, "knowledge entry is not verified");
  }
  const auto prompt = render_prompt(builtin_template(PromptName::Stage3QA),
                                    {{"class_info", stage3_class_info(record, knowledge)}, {"caption", caption.text}});
  const Provenance provenance{sha256_hex(caption.text), knowledge.content_hash(), sha256_hex(prompt)};
  const int attempts = std::max(1, cfg.max_retries);
  std::optional<Error> last;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    backoff(cfg, attempt);
    auto req = make_request(cfg.qa_model, prompt,
                            retry_temperature(cfg.qa_temperature, attempt, record.id, cfg.seed_material),
                            cfg.qa_max_tokens);
    std::string content;
    try {
      content = client.complete(req).content;
      auto pairs = parse_qa_response(content, record);
      for (auto& qa : pairs) qa.provenance = provenance;
      return pairs;
    } catch (const Error& e) {
      switch (e.code()) {
        case Errc::EndpointError:
          last = e;
          break;
        case Errc::ValidationFailed:
        case Errc::NoJsonFound:
        case Errc::StrictParseError:
          last = Error(Errc::ValidationFailed, e.code() == Errc::ValidationFailed ? e.detail() : std::string(errc_name(e.code())),
                       e.what())
                     .with_raw(content);
          break;
        default:
          throw;
      }
    }
  }
  throw *last;
}

}  // namespace agrimm::synthesis
