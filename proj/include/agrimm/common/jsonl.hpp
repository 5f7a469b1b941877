#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>

namespace agrimm {

using json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents);

enum class TrailingLine {
  Strict,   // malformed final line is a ParseError
  Tolerate  // malformed final line (interrupted append) is dropped
};

/// Calls `on_record(value, line_no)` for each non-blank line. Line numbers
/// are 1-based. Throws Errc::ParseError with the line number on bad JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& on_record,
                    TrailingLine trailing = TrailingLine::Strict);

/// Compact single-line serialization used for every JSONL artifact.
std::string to_jsonl_line(const json& value);

/// Thread-safe line appender. One writer per file; lines are flushed every
/// `flush_every` appends and on destruction.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path, std::size_t flush_every = 64);

  void append(const json& value);
  void flush();

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::size_t pending_ = 0;
  std::size_t flush_every_;
};

}  // namespace agrimm
