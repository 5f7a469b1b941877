#pragma once

#include "agrimm/common/clock.hpp"
#include "agrimm/corpus/corpus.hpp"
#include "agrimm/review/knowledge.hpp"
#include "agrimm/synthesis/chat_client.hpp"

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agrimm::synthesis {

struct SynthesisConfig {
  std::string caption_model = "gemma-3-12b";
  std::string knowledge_model = "gemini-3-pro";
  std::string qa_model = "llama-3.1-8b-instruct";
  double caption_temperature = 0.2;
  double knowledge_temperature = 0.2;
  double qa_temperature = 0.7;
  int caption_max_tokens = 512;
  int knowledge_max_tokens = 8192;
  int qa_max_tokens = 2048;
  int max_retries = 3;  // total attempts per item
  std::chrono::milliseconds backoff_base{500};
  std::size_t stage2_batch = 10;
  std::size_t min_words = 150;
  std::size_t max_words = 600;
  int max_reretrievals = 2;
  bool attach_image = false;
  /// Mixed into the retry temperature jitter so reruns are reproducible.
  std::string seed_material;
};

struct Caption {
  std::string image_id;
  std::string text;
  std::string injected_label;
  std::string model_id;
  std::string created_at;
  int attempts = 1;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static Caption from_json(const nlohmann::json& value);
};

enum class QACategory { Identification, VisualReasoning, HealthCondition, CultivationKnowledge, Quantification };
inline constexpr std::array<QACategory, 5> kQACategories = {
    QACategory::Identification, QACategory::VisualReasoning, QACategory::HealthCondition,
    QACategory::CultivationKnowledge, QACategory::Quantification};

std::string_view to_string(QACategory c);
/// Accepts the canonical names and the slot titles used in the Stage III
/// prompt ("Condition & Health", "Anatomy/Detail"), ignoring case, spaces
/// and punctuation.
std::optional<QACategory> parse_qa_category(std::string_view text);

struct Provenance {
  std::string caption_hash;
  std::string knowledge_hash;
  std::string prompt_hash;
};

struct QAPair {
  std::string image_id;
  std::string question;
  std::string answer;
  QACategory category = QACategory::Identification;
  Provenance provenance;

  nlohmann::json to_json() const;
  static QAPair from_json(const nlohmann::json& value);
};

/// {extra_details} for Stage I: the class label, plus the ground-truth count
/// for Counting records.
std::string caption_extra_details(const corpus::ImageRecord& record);

/// {class_info} for Stage III: label and verified description, plus the
/// ground-truth count sentence for Counting records.
std::string stage3_class_info(const corpus::ImageRecord& record, const review::KnowledgeEntry& knowledge);

/// Reason the caption is unacceptable, or nullopt.
std::optional<std::string> validate_caption(std::string_view text);

/// Parses and validates a Stage III response against `record`. Throws
/// Errc::ValidationFailed("count=N", "category set", "quantification count",
/// ...) or extract_json errors.
std::vector<QAPair> parse_qa_response(std::string_view text, const corpus::ImageRecord& record);

/// Stage I. Retries validation failures and endpoint errors up to
/// cfg.max_retries attempts; throws the last Errc::ValidationFailed (with
/// the raw response) or Errc::EndpointError.
Caption stage1_caption(const corpus::ImageRecord& record, ChatClient& client,
                       const SynthesisConfig& cfg, const Clock& clock = system_clock());

/// Corrective reviewer notes keyed by class label, appended to the Stage II
/// prompt when a rejected class is re-retrieved.
using CorrectiveNotes = std::map<std::string, std::string, std::less<>>;

/// Stage II for one batch (1..cfg.stage2_batch labels). Classes whose
/// description is missing or outside [min_words, max_words] are re-requested
/// one at a time; any still missing after cfg.max_retries attempts raise
/// Errc::MissingClass listing them. Returned entries are Pending, in batch
/// order.
std::vector<review::KnowledgeEntry> stage2_retrieve(std::span<const std::string> class_batch,
                                                    review::KnowledgeKind kind, ChatClient& client,
                                                    const SynthesisConfig& cfg,
                                                    const CorrectiveNotes& notes = {});

/// Renders the Stage II prompt for a batch (exposed for inspection/tests).
std::string stage2_prompt(std::span<const std::string> class_batch, review::KnowledgeKind kind,
                          const CorrectiveNotes& notes = {});

/// Stage III. `knowledge` must be Approved or Edited (Errc::StateError
/// otherwise). Returns the five pairs in category order.
std::vector<QAPair> stage3_generate(const corpus::ImageRecord& record, const Caption& caption,
                                    const review::KnowledgeEntry& knowledge, ChatClient& client,
                                    const SynthesisConfig& cfg);

/// Temperature used on attempt `attempt` (0-based). Attempt 0 uses `base`;
/// retries draw a seeded jitter in [-0.1, +0.3] clamped to [0, 1.5].
double retry_temperature(double base, int attempt, std::string_view item_key, std::string_view seed_material);

}  // namespace agrimm::synthesis
