#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agrimm::synthesis {

enum class PromptName { Stage1Caption, Stage2Species, Stage2Disease, Stage3QA, Judge };

std::string_view to_string(PromptName name);

/// A prompt body with `{identifier}` placeholders. Any other brace sequence
/// (`{{`, `{"class_name": ...}`) is literal text.
struct PromptTemplate {
  PromptName name;
  std::string body;
};

using PromptBindings = std::map<std::string, std::string, std::less<>>;

/// The pipeline's stock prompts, byte-identical to the published templates.
const PromptTemplate& builtin_template(PromptName name);

/// Distinct placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

/// Single-pass substitution: bound values are inserted verbatim and never
/// rescanned. Errc::MissingBinding for an unbound placeholder,
/// Errc::UnknownPlaceholder for a binding the template does not use.
std::string render_prompt(const PromptTemplate& tmpl, const PromptBindings& bindings);

/// Inverse of render_prompt: recovers placeholder values from a rendered
/// prompt by matching the literal runs in order (each value extends to the
/// next occurrence of the following literal). Text after the final literal
/// is tolerated. Returns nullopt when the literals do not line up.
std::optional<PromptBindings> match_prompt(const PromptTemplate& tmpl, std::string_view rendered);

}  // namespace agrimm::synthesis
