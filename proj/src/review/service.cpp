#include "agrimm/review/service.hpp"

#include "agrimm/common/error.hpp"

namespace agrimm::review {

const KnowledgeEntry* QueueSnapshot::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

ReviewService::ReviewService(ReviewQueue queue) : queue_(std::move(queue)) {
  publish();
  writer_ = std::thread([this] { run(); });
}

ReviewService::~ReviewService() { stop(); }

void ReviewService::stop() {
  {
    std::lock_guard lock(task_mutex_);
    stopping_ = true;
  }
  task_cv_.notify_all();
  if (writer_.joinable()) writer_.join();
}

void ReviewService::post(std::function<void()> task) {
  {
    std::lock_guard lock(task_mutex_);
    if (stopping_) throw Error(Errc::StateError, "service", "review service is stopped");
    tasks_.push_back(std::move(task));
  }
  task_cv_.notify_one();
}

std::future<KnowledgeEntry> ReviewService::submit(Verdict verdict) {
  auto promise = std::make_shared<std::promise<KnowledgeEntry>>();
  auto future = promise->get_future();
  post([this, promise, v = std::move(verdict)] {
    try {
      auto entry = queue_.apply_verdict(v);
      publish();
      promise->set_value(std::move(entry));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  });
  return future;
}

std::future<void> ReviewService::enqueue(std::vector<KnowledgeEntry> entries) {
  auto promise = std::make_shared<std::promise<void>>();
  auto future = promise->get_future();
  post([this, promise, e = std::move(entries)]() mutable {
    try {
      queue_.enqueue(std::move(e));
      publish();
      promise->set_value();
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  });
  return future;
}

std::shared_ptr<const QueueSnapshot> ReviewService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void ReviewService::publish() {
  auto snap = std::make_shared<QueueSnapshot>();
  snap->entries = queue_.entries();
  snap->stats = queue_.stats();
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

void ReviewService::run() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(task_mutex_);
      task_cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
      if (tasks_.empty()) return;  // stopping and drained
      task = std::move(tasks_.front());
      tasks_.pop_front();
    }
    task();
  }
}

}  // namespace agrimm::review
