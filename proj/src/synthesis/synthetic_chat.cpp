#include "agrimm/synthesis/synthetic_chat.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/hash.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/synthesis/json_extract.hpp"
#include "agrimm/synthesis/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

namespace agrimm::synthesis {

namespace {

std::size_t pick(std::string_view key, std::size_t n) {
  return static_cast<std::size_t>(std::stoull(sha256_hex(key).substr(0, 8), nullptr, 16) % n);
}

std::string caption_for(const std::string& extra) {
  static const char* kStages[] = {"vegetative", "flowering", "fruiting", "seedling"};
  static const char* kViews[] = {"oblique", "top-down", "side", "macro"};
  std::string out = "The image shows " + extra + " growing in an open field setting. ";
  out += "The growth stage appears to be " + std::string(kStages[pick(extra, 4)]) +
         " with moderate plant density and partial ground cover. ";
  out += "The image perspective is " + std::string(kViews[pick(extra + "/view", 4)]) +
         " under natural daylight conditions. ";
  out += "Plant health indicators show green foliage with no clearly visible lesions.";
  return out;
}

std::string description_for(const std::string& label, bool disease) {
  std::ostringstream out;
  if (disease) {
    out << label << " is documented in the phytopathology literature as a condition with a consistent "
        << "etiology, a recognised causal agent, and a characteristic progression on susceptible hosts. "
        << "Typical visible symptoms include lesions with defined margins, chlorotic halos, localized "
        << "discoloration, and in advanced stages necrosis or wilting of the affected tissue. "
        << "The leaves are usually affected first, although stems, fruits, and roots may show secondary "
        << "damage when environmental conditions favour the pathogen. "
        << "The infection cycle begins when inoculum reaches the host surface, germinates under high "
        << "humidity, and colonizes the tissue before producing new propagules that spread by wind, "
        << "rain splash, insects, or contaminated tools. "
        << "Warm temperatures, prolonged leaf wetness, dense canopies, and poor air circulation all "
        << "accelerate disease development in the field and in protected cultivation. "
        << "Compared with a healthy plant phenotype, which shows uniform green coloration, turgid leaves, "
        << "and normal growth, plants affected by " << label << " display irregular patterns that "
        << "trained scouts can recognise early enough to guide integrated management decisions.";
  } else {
    out << label << " is a plant taxon described in botanical references with a stable taxonomic "
        << "placement within its family and genus, and it is recognised by agronomists and field "
        << "botanists alike. "
        << "Its morphology includes characteristic leaf shape and venation, a distinctive stem "
        << "structure, a recognisable inflorescence, and fruit morphology that supports identification "
        << "in the field. "
        << "The native habitat and biogeographic distribution of " << label << " span regions whose "
        << "climate, soils, and seasonal rainfall suit its life cycle, and it has been introduced "
        << "elsewhere through cultivation and trade. "
        << "Cultivation requirements include well drained soil with adequate organic matter, a suitable "
        << "temperature range, reliable water supply during establishment, and protection from "
        << "prolonged waterlogging. "
        << "Ecologically the species interacts with pollinators, soil organisms, and herbivores, and "
        << "agriculturally it contributes food, fibre, forage, medicine, timber, or ornamental value "
        << "depending on the production system in which it is grown and managed. "
        << "Field identification is most reliable when several of these traits are checked together "
        << "rather than relying on a single feature.";
  }
  return out.str();
}

std::string qa_response(const std::string& class_info, const std::string& caption) {
  const auto colon = class_info.find(": ");
  const std::string label = colon == std::string::npos ? std::string("the plant") : class_info.substr(0, colon);
  std::smatch m;
  std::optional<std::string> count;
  static const std::regex kCount(R"(Ground-truth count: the image contains (\d+) )");
  if (std::regex_search(class_info, m, kCount)) count = m[1].str();

  nlohmann::json arr = nlohmann::json::array();
  arr.push_back({{"question", "What plant is shown in this image?"},
                 {"answer", "The image shows " + label + "."},
                 {"category", "Identification"}});
  arr.push_back({{"question", "What visual features distinguish this plant?"},
                 {"answer", "The visible leaf shape, stem structure and overall habit are consistent with " + label + "."},
                 {"category", "Visual Reasoning"}});
  const bool lesions = caption.find("lesion") != std::string::npos && caption.find("no clearly visible lesions") == std::string::npos;
  arr.push_back({{"question", "What is the apparent health condition of the plant?"},
                 {"answer", lesions ? "The plant shows visible lesions that indicate stress."
                                    : "The foliage appears green and shows no clearly visible lesions."},
                 {"category", "Health Condition"}});
  arr.push_back({{"question", "What growing conditions does this plant require?"},
                 {"answer", "It needs well drained soil, adequate water during establishment and a suitable temperature range."},
                 {"category", "Cultivation Knowledge"}});
  arr.push_back({{"question", count ? "How many " + label + " are visible in the image?" : "How many plants are in focus?"},
                 {"answer", count ? "There are " + *count + " " + label + " visible in the image."
                                  : "The image focuses on a single " + label + " specimen."},
                 {"category", "Quantification"}});
  return arr.dump();
}

std::set<std::string> lower_tokens(const std::string& text) {
  std::set<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.insert(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(cur);
  return out;
}

std::string judge_response(const std::string& truth, const std::string& output) {
  const auto a = lower_tokens(truth);
  const auto b = lower_tokens(output);
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  const double p = b.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(b.size());
  const double r = a.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(a.size());
  const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  const int score = f1 >= 0.8 ? 4 : f1 >= 0.5 ? 3 : f1 >= 0.2 ? 2 : 1;
  static const char* kWhy[] = {"", "The output misses most key facts.", "The output misses important facts.",
                               "The output is accurate with minor omissions.", "The output matches the ground truth."};
  return nlohmann::json{{"score", score}, {"justification", kWhy[score]}}.dump(2);
}

}  // namespace

SyntheticChatClient::SyntheticChatClient(std::optional<std::filesystem::path> fixture_dir)
    : fixture_dir_(std::move(fixture_dir)) {}

std::string SyntheticChatClient::fixture_key(const ChatRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return sha256_hex(it->content);
  }
  return sha256_hex("");
}

ChatResponse SyntheticChatClient::complete(const ChatRequest& request) {
  if (fixture_dir_) {
    const auto path = *fixture_dir_ / (fixture_key(request) + ".txt");
    if (std::filesystem::exists(path)) return {read_text_file(path), {}};
  }
  std::string prompt;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") {
      prompt = it->content;
      break;
    }
  }

  if (auto b = match_prompt(builtin_template(PromptName::Stage1Caption), prompt)) {
    return {caption_for(b->at("extra_details")), {}};
  }
  for (auto name : {PromptName::Stage2Species, PromptName::Stage2Disease}) {
    if (auto b = match_prompt(builtin_template(name), prompt)) {
      const auto& list = b->begin()->second;
      nlohmann::json labels = extract_json(list);
      nlohmann::json out = nlohmann::json::object();
      for (const auto& l : labels) {
        const auto label = l.get<std::string>();
        out[label] = description_for(label, name == PromptName::Stage2Disease);
      }
      return {out.dump(), {"https://example.org/references/" + short_hash(list, 8)}};
    }
  }
  if (auto b = match_prompt(builtin_template(PromptName::Stage3QA), prompt)) {
    return {"```json\n" + qa_response(b->at("class_info"), b->at("caption")) + "\n```", {}};
  }
  if (auto b = match_prompt(builtin_template(PromptName::Judge), prompt)) {
    return {judge_response(b->at("ground_truth"), b->at("model_output")), {}};
  }
  throw Error(Errc::EndpointError, "synthetic", "prompt does not match any known template");
}

}  // namespace agrimm::synthesis
