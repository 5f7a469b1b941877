#pragma once

#include "agrimm/review/queue.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <thread>

namespace agrimm::review {

/// Immutable view of the queue published after every mutation.
struct QueueSnapshot {
  std::vector<KnowledgeEntry> entries;  // FIFO order
  ReviewStats stats;

  const KnowledgeEntry* find(std::string_view id) const;
};

/// Owns a ReviewQueue on a dedicated writer thread. Mutations are submitted
/// as tasks and acknowledged through futures; readers take the latest
/// published snapshot without touching the queue.
class ReviewService {
 public:
  explicit ReviewService(ReviewQueue queue);
  ~ReviewService();

  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  std::future<KnowledgeEntry> submit(Verdict verdict);
  std::future<void> enqueue(std::vector<KnowledgeEntry> entries);

  std::shared_ptr<const QueueSnapshot> snapshot() const;

  /// Drains pending tasks and joins the writer.
  void stop();

 private:
  void run();
  void publish();
  void post(std::function<void()> task);

  ReviewQueue queue_;  // touched only by the writer thread after construction
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const QueueSnapshot> snapshot_;

  std::mutex task_mutex_;
  std::condition_variable task_cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
  std::thread writer_;
};

}  // namespace agrimm::review
