#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fairdiv/io.hpp"

namespace fairdiv {

namespace detail {

// End index (inclusive) of the object starting at `start`, or npos.
inline size_t match_brace(std::string_view s, size_t start) {
  int depth = 0;
  bool in_string = false;
  for (size_t k = start; k < s.size(); ++k) {
    char c = s[k];
    if (in_string) {
      if (c == '\\') ++k;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return k;
  }
  return std::string_view::npos;
}

// Removes commas directly before a closing brace or bracket, outside strings.
inline std::string strip_trailing_commas(std::string_view s) {
  std::string out;
  bool in_string = false;
  for (size_t k = 0; k < s.size(); ++k) {
    char c = s[k];
    if (in_string) {
      out += c;
      if (c == '\\' && k + 1 < s.size()) out += s[++k];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      size_t j = s.find_first_not_of(" \t\r\n", k + 1);
      if (j != std::string_view::npos && (s[j] == '}' || s[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

}  // namespace detail

// First balanced {...} span in `text` that parses as a JSON object.
inline std::optional<json> extract_json_object(std::string_view text) {
  for (size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    size_t end = detail::match_brace(text, start);
    if (end == std::string_view::npos) continue;
    std::string_view span = text.substr(start, end - start + 1);
    for (const std::string& candidate : {std::string(span), detail::strip_trailing_commas(span)}) {
      auto j = json::parse(candidate, nullptr, false);
      if (!j.is_discarded() && j.is_object()) return j;
    }
  }
  return std::nullopt;
}

inline OutcomeParse parse_response(const Instance& in, std::string_view text) {
  auto j = extract_json_object(text);
  if (!j) {
    OutcomeParse r;
    r.failure = "no JSON object found";
    return r;
  }
  return outcome_from_json(in, *j);
}

}  // namespace fairdiv
