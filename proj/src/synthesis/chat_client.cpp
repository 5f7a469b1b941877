#include "agrimm/synthesis/chat_client.hpp"

#include "agrimm/common/error.hpp"

#include <httplib.h>

namespace agrimm::synthesis {

using nlohmann::json;

json to_wire(const ChatRequest& request) {
  json messages = json::array();
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    const auto& m = request.messages[i];
    const bool attach = request.image_url && i + 1 == request.messages.size() && m.role == "user";
    if (attach) {
      messages.push_back({{"role", m.role},
                          {"content", json::array({{{"type", "text"}, {"text", m.content}},
                                                   {{"type", "image_url"},
                                                    {"image_url", {{"url", *request.image_url}}}}})}});
    } else {
      messages.push_back({{"role", m.role}, {"content", m.content}});
    }
  }
  return json{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

ChatResponse parse_chat_response(const json& body) {
  const json* content = nullptr;
  const json* message = nullptr;
  if (body.is_object()) {
    auto choices = body.find("choices");
    if (choices != body.end() && choices->is_array() && !choices->empty()) {
      auto msg = (*choices)[0].find("message");
      if (msg != (*choices)[0].end() && msg->is_object()) {
        message = &*msg;
        auto c = msg->find("content");
        if (c != msg->end() && c->is_string()) content = &*c;
      }
    }
  }
  if (content == nullptr) {
    throw Error(Errc::EndpointError, "choices[0].message.content", "missing in response")
        .with_raw(body.dump());
  }
  ChatResponse out;
  out.content = content->get<std::string>();
  if (auto it = body.find("citations"); it != body.end() && it->is_array()) {
    for (const auto& c : *it) {
      if (c.is_string()) out.citations.push_back(c.get<std::string>());
    }
  }
  if (auto it = message->find("annotations"); it != message->end() && it->is_array()) {
    for (const auto& a : *it) {
      auto uc = a.find("url_citation");
      if (uc != a.end() && uc->is_object() && uc->contains("url") && (*uc)["url"].is_string()) {
        out.citations.push_back((*uc)["url"].get<std::string>());
      }
    }
  }
  return out;
}

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::ConfigError, url, "URL needs a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpChatClient::HttpChatClient(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)), parts_(split_url(endpoint_.url)) {}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  httplib::Client client(parts_.origin);
  client.set_connection_timeout(endpoint_.timeout);
  client.set_read_timeout(endpoint_.timeout);
  client.set_write_timeout(endpoint_.timeout);
  if (endpoint_.bearer_token) client.set_bearer_token_auth(*endpoint_.bearer_token);

  auto result = client.Post(parts_.path, to_wire(request).dump(), "application/json");
  if (!result) {
    throw Error(Errc::EndpointError, endpoint_.url, "transport: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw Error(Errc::EndpointError, endpoint_.url, "HTTP " + std::to_string(result->status))
        .with_raw(result->body);
  }
  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::EndpointError, endpoint_.url, std::string("non-JSON body: ") + e.what())
        .with_raw(result->body);
  }
  return parse_chat_response(body);
}

}  // namespace agrimm::synthesis
