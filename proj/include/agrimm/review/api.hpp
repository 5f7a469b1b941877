#pragma once

#include "agrimm/common/clock.hpp"
#include "agrimm/review/service.hpp"

#include <memory>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace agrimm::review {

struct ApiOptions {
  /// When set, every request must carry `Authorization: Bearer <token>`.
  std::optional<std::string> bearer_token;
  /// Value for Access-Control-Allow-Origin; the review UI is served
  /// from its own origin.
  std::string allow_origin = "*";
  Clock clock = system_clock();
};

/// HTTP JSON API over a ReviewService:
///   GET  /api/queue?state=pending|approved|rejected|edited[&kind=Species|Disease]
///   GET  /api/entries/{id}
///   POST /api/entries/{id}/verdict   {action, edited_text?, note?, reviewer_id}
///   GET  /api/stats
/// Errors are {"error": message, "code": kind} with 400/401/404/409/500.
class ReviewServer {
 public:
  ReviewServer(ReviewService& service, ApiOptions options = {});
  ~ReviewServer();

  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port or throws Errc::BindError.
  int bind(const std::string& host, int port);

  /// Serves on the calling thread until stop().
  void listen();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  void install_routes();

  ReviewService& service_;
  ApiOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace agrimm::review
