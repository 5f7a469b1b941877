#include "agrimm/synthesis/prompts.hpp"

#include "agrimm/common/error.hpp"

#include <cctype>
#include <algorithm>
#include <set>

namespace agrimm::synthesis {

namespace {

// Template bodies are kept byte-for-byte, including trailing spaces at the
// ends of wrapped lines.
constexpr std::string_view kStage1CaptionBody = R"PROMPT(Write a descriptive caption of about 3-5 sentences given that 
the image contains {extra_details}.
Include these aspects if clearly visible:
- Crop name and type
- Growth stage (seedling/vegetative/flowering/fruiting/harvest)
- Ground cover and plant density
- Image perspective (top-down/oblique/side/macro/unknown)
- Environmental conditions (field/greenhouse/laboratory)
- Plant health indicators
Rules for caption:
- Use clear, neutral language
- No speculation - only describe what is visible
- If something cannot be determined, use 'unknown'
- Write as natural sentences)PROMPT";

constexpr std::string_view kStage2SpeciesBody = R"PROMPT(For the class name {class_names}, generate a 
detailed botanical description paragraph (~300 words) covering:
- Taxonomic classification (family, genus, species)
- Morphological characteristics (leaf shape, stem structure, 
  inflorescence, fruit morphology)
- Native habitat and biogeographic distribution
- Cultivation requirements (soil, climate, water)
- Ecological significance and agricultural use
Format your output as {"class_name":"detailed discription"})PROMPT";

constexpr std::string_view kStage2DiseaseBody = R"PROMPT(For each class name in {disease_class_names}, generate a 
detailed paragraph (~300 words) providing an integrated account of:
- Plant taxonomy, morphology, and natural habitat
- Disease etiology (causal agent, pathogen taxonomy)
- Visible symptoms (lesion morphology, discoloration patterns, 
  necrosis, wilting)
- Affected plant organs (leaves, stems, fruits, roots)
- Pathogen biology and infection cycle
- Environmental factors influencing disease development
- Comparison with healthy plant phenotype
When the class represents "Healthy", describe the ideal 
botanical state emphasizing vigor, normal morphology, and 
optimal appearance.)PROMPT";

constexpr std::string_view kStage3QaBody = R"PROMPT(You are an expert agricultural AI trainer. Generate exactly 
5 high-quality, diverse QA pairs.

**SOURCE DATA:**
- Additional Info: {class_info}
- Image Caption: {caption}

**STRICT RULES:**
1. GROUNDING: Use ONLY provided info. If the image/info 
   doesn't mention a disease, don't invent one.
2. FORMAT: Output a single JSON array of 5 objects.
3. ANSWER STYLE: Use full, professional sentences. 
   Instead of "okra," say "The image shows an okra plant 
   (Abelmoschus esculentus)."

**REQUIRED QUESTION CATEGORIES (One per slot):**
1. Identification: Identify the plant and its variety.
2. Visual Reasoning: Ask HOW the plant can be identified 
   (e.g., "What visual features distinguish this species?").
3. Condition & Health: Ask about leaf/fruit/stem state 
   (color, spots, growth stage).
4. Cultivation Knowledge: Connect visuals to agronomic 
   requirements (e.g., "What are this plant's soil pH needs?").
5. Anatomy/Detail: Ask about a specific visible part 
   (flower, fruit, leaf structure).)PROMPT";

constexpr std::string_view kJudgeBody = R"PROMPT(You are an expert evaluator assessing an AI model's response. 
Evaluate systematically and objectively.

**QUESTION**: {question}

**GROUND TRUTH (Correct Answer)**: 
{ground_truth}

**MODEL OUTPUT (To Evaluate)**:
{model_output}

---

**EVALUATION CRITERIA**
1. **Correctness**: Does the output contain the correct information from the 
Ground Truth?
2. **Completeness**: Does the output include all important information from 
Ground Truth?
3. **Clarity**: Is the output clear, well-organized, and easy to understand?
4. **Conciseness**: Is the output appropriately concise without unnecessary content?

---

**SCORING RUBRIC** (1-4 scale)
**Score 1 (Poor)**: Major deficiencies. Factually incorrect or missing multiple 
key facts.
**Score 2 (Fair)**: Significant issues. Missing 1-2 important facts or minor 
inaccuracies.
**Score 3 (Good)**: Solid with minor issues only. Factually accurate but maybe 
slightly verbose 
or misses tiny details.
**Score 4 (Excellent)**: Outstanding quality. Perfectly accurate, complete, clear, 
and concise.

---

**OUTPUT**: Provide evaluation in this EXACT JSON format:
{{
  "score": <integer 1-4>,
  "justification": "1-2 sentence summary"
}}

Begin evaluation:)PROMPT";

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_text(span) for literal runs and on_placeholder(name) for each
// {identifier}. Braces not followed by an identifier and a closing brace
// are literal text.
template <typename Text, typename Placeholder>
void scan(std::string_view body, Text&& on_text, Placeholder&& on_placeholder) {
  std::size_t literal_start = 0;
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{' && i + 1 < body.size() && ident_start(body[i + 1])) {
      std::size_t j = i + 2;
      while (j < body.size() && ident_char(body[j])) ++j;
      if (j < body.size() && body[j] == '}') {
        on_text(body.substr(literal_start, i - literal_start));
        on_placeholder(body.substr(i + 1, j - i - 1));
        i = j + 1;
        literal_start = i;
        continue;
      }
    }
    ++i;
  }
  on_text(body.substr(literal_start));
}

}  // namespace

std::string_view to_string(PromptName name) {
  switch (name) {
    case PromptName::Stage1Caption: return "Stage1Caption";
    case PromptName::Stage2Species: return "Stage2Species";
    case PromptName::Stage2Disease: return "Stage2Disease";
    case PromptName::Stage3QA: return "Stage3QA";
    case PromptName::Judge: return "Judge";
  }
  return "Stage1Caption";
}

const PromptTemplate& builtin_template(PromptName name) {
  static const PromptTemplate kTemplates[] = {
      {PromptName::Stage1Caption, std::string(kStage1CaptionBody)},
      {PromptName::Stage2Species, std::string(kStage2SpeciesBody)},
      {PromptName::Stage2Disease, std::string(kStage2DiseaseBody)},
      {PromptName::Stage3QA, std::string(kStage3QaBody)},
      {PromptName::Judge, std::string(kJudgeBody)},
  };
  return kTemplates[static_cast<std::size_t>(name)];
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  scan(body, [](std::string_view) {}, [&](std::string_view name) {
    if (seen.insert(std::string(name)).second) out.emplace_back(name);
  });
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const PromptBindings& bindings) {
  const auto names = placeholders(tmpl.body);
  for (const auto& name : names) {
    if (bindings.find(name) == bindings.end()) throw Error(Errc::MissingBinding, name);
  }
  for (const auto& [name, value] : bindings) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(Errc::UnknownPlaceholder, name,
                  "template " + std::string(to_string(tmpl.name)) + " has no such placeholder");
    }
  }
  std::string out;
  out.reserve(tmpl.body.size() + 256);
  scan(tmpl.body, [&](std::string_view text) { out += text; },
       [&](std::string_view name) { out += bindings.find(name)->second; });
  return out;
}

std::optional<PromptBindings> match_prompt(const PromptTemplate& tmpl, std::string_view rendered) {
  std::vector<std::string_view> literals;
  std::vector<std::string_view> names;
  scan(tmpl.body, [&](std::string_view text) { literals.push_back(text); },
       [&](std::string_view name) { names.push_back(name); });
  // literals.size() == names.size() + 1
  if (rendered.substr(0, literals[0].size()) != literals[0]) return std::nullopt;
  std::size_t pos = literals[0].size();
  PromptBindings out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& next = literals[i + 1];
    std::size_t end = next.empty() ? rendered.size() : rendered.find(next, pos);
    if (end == std::string_view::npos) return std::nullopt;
    auto value = rendered.substr(pos, end - pos);
    auto [it, inserted] = out.emplace(std::string(names[i]), std::string(value));
    if (!inserted && it->second != value) return std::nullopt;
    pos = end + next.size();
  }
  return out;
}

}  // namespace agrimm::synthesis
