#include "argbot/prompt_templates.hpp"

#include <map>

#include "argbot/text.hpp"

namespace argbot::prompts {
namespace {

// Matches `text` against a template whose placeholders are listed in order.
// Each placeholder captures up to the first occurrence of the literal that
// follows it.
std::optional<std::vector<std::string>> match(std::string_view tmpl, const std::vector<std::string_view>& holders,
                                              std::string_view text) {
  std::vector<std::string_view> literals;
  std::size_t pos = 0;
  for (auto h : holders) {
    const auto at = tmpl.find(h, pos);
    if (at == std::string_view::npos) return std::nullopt;
    literals.push_back(tmpl.substr(pos, at - pos));
    pos = at + h.size();
  }
  literals.push_back(tmpl.substr(pos));

  std::vector<std::string> captures;
  if (text.substr(0, literals[0].size()) != literals[0]) return std::nullopt;
  std::size_t cursor = literals[0].size();
  for (std::size_t i = 0; i < holders.size(); ++i) {
    const auto& next = literals[i + 1];
    std::size_t end;
    if (i + 1 == holders.size()) {
      if (text.size() < cursor + next.size()) return std::nullopt;
      end = text.size() - next.size();
      if (text.substr(end) != next) return std::nullopt;
    } else {
      end = next.empty() ? cursor : text.find(next, cursor);
      if (end == std::string_view::npos) return std::nullopt;
    }
    captures.emplace_back(text.substr(cursor, end - cursor));
    cursor = end + next.size();
  }
  return captures;
}

std::string unescape_braces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '{' || s[i] == '}') && i + 1 < s.size() && s[i + 1] == s[i]) ++i;
    out.push_back(s[i]);
  }
  return out;
}

// Literal text of a single-field format template, split at the field.
std::pair<std::string, std::string> split_format(std::string_view tmpl) {
  for (std::size_t i = 0; i + 1 < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && tmpl[i + 1] == '{') {
      ++i;
      continue;
    }
    if (tmpl[i] == '}' && tmpl[i + 1] == '}') {
      ++i;
      continue;
    }
    if (tmpl[i] == '{' && tmpl[i + 1] == '}') {
      return {unescape_braces(tmpl.substr(0, i)), unescape_braces(tmpl.substr(i + 2))};
    }
  }
  return {unescape_braces(tmpl), {}};
}

}  // namespace

std::string render_detection(int start_min, int end_min, std::string_view log, std::string_view arguments_list) {
  // Substitute left to right in one pass so values containing placeholder
  // text are never re-expanded.
  const std::string& tmpl = detection_template();
  const std::map<std::string_view, std::string> values = {
      {kStartTime, std::to_string(start_min)},
      {kEndTime, std::to_string(end_min)},
      {kLog, std::string(log)},
      {kArgumentsList, std::string(arguments_list)},
  };
  std::string out;
  out.reserve(tmpl.size() + log.size() + arguments_list.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '$') {
      for (const auto& [key, value] : values) {
        if (std::string_view(tmpl).substr(i, key.size()) == key) {
          out += value;
          i += key.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

std::string format_positional(std::string_view tmpl, std::string_view value) {
  auto [head, tail] = split_format(tmpl);
  return head + std::string(value) + tail;
}

std::string render_annotation_system(std::string_view list_of_arguments) {
  return format_positional(annotation_system_template(), list_of_arguments);
}

std::string render_annotation_user(std::string_view comment) {
  return format_positional(annotation_user_template(), comment);
}

std::optional<DetectionParts> parse_detection(std::string_view prompt) {
  auto caps = match(detection_template(), {kStartTime, kEndTime, kLog, kArgumentsList}, prompt);
  if (!caps) return std::nullopt;
  return DetectionParts{(*caps)[0], (*caps)[1], (*caps)[2], (*caps)[3]};
}

std::optional<std::string> parse_annotation_system(std::string_view system_prompt) {
  auto [head, tail] = split_format(annotation_system_template());
  if (system_prompt.size() < head.size() + tail.size()) return std::nullopt;
  if (system_prompt.substr(0, head.size()) != head) return std::nullopt;
  if (system_prompt.substr(system_prompt.size() - tail.size()) != tail) return std::nullopt;
  return std::string(system_prompt.substr(head.size(), system_prompt.size() - head.size() - tail.size()));
}

std::optional<std::string> parse_annotation_user(std::string_view user_prompt) {
  auto [head, tail] = split_format(annotation_user_template());
  if (user_prompt.size() < head.size() + tail.size()) return std::nullopt;
  if (user_prompt.substr(0, head.size()) != head) return std::nullopt;
  if (user_prompt.substr(user_prompt.size() - tail.size()) != tail) return std::nullopt;
  return std::string(user_prompt.substr(head.size(), user_prompt.size() - head.size() - tail.size()));
}

std::vector<std::string> split_argument_list(std::string_view joined) {
  std::vector<std::string> segments;
  std::size_t start = 0;
  while (true) {
    const auto pos = joined.find(", ", start);
    if (pos == std::string_view::npos) {
      segments.emplace_back(joined.substr(start));
      break;
    }
    segments.emplace_back(joined.substr(start, pos - start));
    start = pos + 2;
  }
  std::vector<std::string> items;
  for (auto& seg : segments) {
    if (items.empty() || seg.find(": ") != std::string::npos) {
      items.push_back(seg);
    } else {
      items.back() += ", " + seg;
    }
  }
  std::vector<std::string> names;
  for (const auto& item : items) {
    const auto colon = item.find(": ");
    const std::string name = text::trim(colon == std::string::npos ? std::string_view(item)
                                                                   : std::string_view(item).substr(0, colon));
    if (!name.empty()) names.push_back(name);
  }
  return names;
}

std::vector<std::string> split_argument_lines(std::string_view lines) {
  std::vector<std::string> names;
  for (const auto& line : text::split(lines, '\n')) {
    const auto colon = line.find(": ");
    const std::string name =
        text::trim(colon == std::string::npos ? std::string_view(line) : std::string_view(line).substr(0, colon));
    if (!name.empty()) names.push_back(name);
  }
  return names;
}

}  // namespace argbot::prompts
