#pragma once

#include "agrimm/synthesis/chat_client.hpp"

#include <filesystem>
#include <optional>

namespace agrimm::synthesis {

/// Offline stand-in for the hosted models, used by `--mock`.
///
/// Responses are a pure function of the prompt: the client recognises which
/// stock template produced the prompt, recovers its bindings, and writes a
/// well-formed answer (a four-sentence caption, ~170-word descriptions, five
/// category-complete QA pairs carrying the injected count, or a judge verdict
/// scored by token overlap). A file `<fixture_dir>/<sha256(prompt)>.txt`
/// overrides the synthetic answer for that exact prompt.
class SyntheticChatClient final : public ChatClient {
 public:
  explicit SyntheticChatClient(std::optional<std::filesystem::path> fixture_dir = std::nullopt);

  ChatResponse complete(const ChatRequest& request) override;

  /// Fixture lookup key: SHA-256 of the last user message.
  static std::string fixture_key(const ChatRequest& request);

 private:
  std::optional<std::filesystem::path> fixture_dir_;
};

}  // namespace agrimm::synthesis
