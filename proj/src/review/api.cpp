#include "agrimm/review/api.hpp"

#include "agrimm/common/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace agrimm::review {

using nlohmann::json;

namespace {

int http_status_for(Errc code) {
  switch (code) {
    case Errc::NotFound: return 404;
    case Errc::StateError: return 409;
    case Errc::ValidationFailed:
    case Errc::ParseError: return 400;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, json{{"error", message}, {"code", code}});
}

}  // namespace

ReviewServer::ReviewServer(ReviewService& service, ApiOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  // httplib's default adds SO_REUSEPORT, which lets a second server share an
  // occupied port instead of failing to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::install_routes() {
  auto& srv = *server_;

  srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", options_.allow_origin);
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    if (options_.bearer_token) {
      const auto auth = req.get_header_value("Authorization");
      if (auth != "Bearer " + *options_.bearer_token) {
        send_error(res, 401, "Unauthorized", "missing or invalid bearer token");
        return httplib::Server::HandlerResponse::Handled;
      }
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.Get("/api/queue", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<EntryState> state;
    std::optional<KnowledgeKind> kind;
    try {
      if (req.has_param("state")) state = parse_state(req.get_param_value("state"));
      if (req.has_param("kind")) kind = parse_kind(req.get_param_value("kind"));
    } catch (const Error& e) {
      send_error(res, 400, "ParseError", e.what());
      return;
    }
    auto snap = service_.snapshot();
    json out = json::array();
    for (const auto& e : snap->entries) {
      if (state && e.state != *state) continue;
      if (kind && e.kind != *kind) continue;
      out.push_back(e.to_json());
    }
    send_json(res, 200, out);
  });

  srv.Get(R"(/api/entries/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = service_.snapshot();
    const auto* entry = snap->find(req.matches[1].str());
    if (entry == nullptr) {
      send_error(res, 404, "NotFound", "no entry " + req.matches[1].str());
      return;
    }
    send_json(res, 200, entry->to_json());
  });

  srv.Post(R"(/api/entries/([^/]+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
    Verdict verdict;
    try {
      auto body = json::parse(req.body);
      verdict = Verdict::from_json(body);
    } catch (const json::exception& e) {
      send_error(res, 400, "ParseError", std::string("malformed verdict body: ") + e.what());
      return;
    } catch (const Error& e) {
      send_error(res, 400, errc_name(e.code()), e.what());
      return;
    }
    verdict.entry_id = req.matches[1].str();
    if (verdict.reviewer_id.empty()) {
      send_error(res, 400, "ValidationFailed", "reviewer_id is required");
      return;
    }
    verdict.timestamp = options_.clock();
    try {
      auto entry = service_.submit(std::move(verdict)).get();
      send_json(res, 200, entry.to_json());
    } catch (const Error& e) {
      send_error(res, http_status_for(e.code()), errc_name(e.code()), e.what());
    }
  });

  srv.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, service_.snapshot()->stats.to_json());
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    } catch (...) {
      send_error(res, 500, "InternalError", "unknown failure");
    }
  });
}

int ReviewServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (server_->bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0) throw Error(Errc::BindError, host + ":" + std::to_string(port));
  return bound;
}

void ReviewServer::listen() { server_->listen_after_bind(); }

void ReviewServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void ReviewServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace agrimm::review
