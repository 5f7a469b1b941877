#include "agrimm/synthesis/json_extract.hpp"

#include "agrimm/common/error.hpp"

#include <cctype>
#include <string>
#include <vector>

namespace agrimm::synthesis {

namespace {

std::string strip_fences(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 3, "```") == 0) {
      i += 3;
      while (i < text.size() && text[i] == '`') ++i;
      while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) ||
                                 text[i] == '_' || text[i] == '-')) {
        ++i;
      }
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace

nlohmann::json extract_json(std::string_view text) {
  const std::string body = strip_fences(text);
  const auto start = body.find_first_of("{[");
  if (start == std::string::npos) throw Error(Errc::NoJsonFound, "", "no '{' or '[' in response");

  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  std::size_t end = std::string::npos;
  for (std::size_t i = start; i < body.size(); ++i) {
    const char c = body[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.back() != c) {
        throw Error(Errc::StrictParseError, std::to_string(i), "mismatched closing bracket");
      }
      stack.pop_back();
      if (stack.empty()) {
        end = i + 1;
        break;
      }
    }
  }
  if (end == std::string::npos) {
    throw Error(Errc::NoJsonFound, "", "opening bracket at " + std::to_string(start) + " never closes");
  }
  try {
    return nlohmann::json::parse(body.begin() + static_cast<std::ptrdiff_t>(start),
                                 body.begin() + static_cast<std::ptrdiff_t>(end));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::StrictParseError, std::to_string(start + e.byte - (e.byte > 0 ? 1 : 0)), e.what());
  }
}

}  // namespace agrimm::synthesis
