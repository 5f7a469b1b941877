#include "agrimm/common/jsonl.hpp"

#include "agrimm/common/error.hpp"

#include <sstream>
#include <vector>

namespace agrimm {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, path.string(), "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::IoError, path.parent_path().string(), ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, tmp.string(), "cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(Errc::IoError, tmp.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, path.string(), ec.message());
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& on_record,
                    TrailingLine trailing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, path.string(), "cannot open for reading");

  std::string line;
  std::size_t line_no = 0;
  std::size_t bad_line = 0;
  std::string bad_message;
  while (std::getline(in, line)) {
    ++line_no;
    if (bad_line != 0) {
      // a malformed line followed by more data is never a torn tail
      throw Error(Errc::ParseError, std::to_string(bad_line), bad_message);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      bad_line = line_no;
      bad_message = path.string() + ": " + e.what();
      continue;
    }
    on_record(value, line_no);
  }
  if (bad_line != 0 && trailing == TrailingLine::Strict) {
    throw Error(Errc::ParseError, std::to_string(bad_line), bad_message);
  }
}

std::string to_jsonl_line(const json& value) {
  return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

JsonlAppender::JsonlAppender(const std::filesystem::path& path, std::size_t flush_every)
    : flush_every_(flush_every == 0 ? 1 : flush_every) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::IoError, path.parent_path().string(), ec.message());
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw Error(Errc::IoError, path.string(), "cannot open for appending");
}

void JsonlAppender::append(const json& value) {
  std::string line = to_jsonl_line(value);
  line.push_back('\n');
  std::lock_guard lock(mutex_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (++pending_ >= flush_every_) {
    out_.flush();
    pending_ = 0;
  }
}

void JsonlAppender::flush() {
  std::lock_guard lock(mutex_);
  out_.flush();
  pending_ = 0;
}

}  // namespace agrimm
