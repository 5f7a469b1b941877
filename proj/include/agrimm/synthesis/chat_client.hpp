#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace agrimm::synthesis {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  /// Optional image reference sent as an `image_url` content part on the
  /// last user message.
  std::optional<std::string> image_url;
};

struct ChatResponse {
  std::string content;
  std::vector<std::string> citations;
};

/// Chat-completions request body: {model, messages, temperature, max_tokens}.
nlohmann::json to_wire(const ChatRequest& request);

/// Reads choices[0].message.content plus any cited sources (top-level
/// `citations` strings or `url_citation` annotations on the message).
/// Throws Errc::EndpointError on an unexpected shape.
ChatResponse parse_chat_response(const nlohmann::json& body);

/// Implementations must be safe to call from several threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Throws Errc::EndpointError on transport or protocol failure.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct HttpEndpoint {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::optional<std::string> bearer_token;
  std::chrono::seconds timeout{120};
};

/// Splits an http(s) URL into scheme+authority and path.
struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};
UrlParts split_url(const std::string& url);

class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpEndpoint endpoint);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  UrlParts parts_;
};

/// Adapts a callable; handy for tests and scripted mocks.
class CallbackChatClient final : public ChatClient {
 public:
  using Handler = std::function<ChatResponse(const ChatRequest&)>;
  explicit CallbackChatClient(Handler handler) : handler_(std::move(handler)) {}

  ChatResponse complete(const ChatRequest& request) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return handler_(request);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  Handler handler_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace agrimm::synthesis
