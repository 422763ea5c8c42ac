#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace argbot::prompts {

// Template texts, embedded from resources/ at build time.
const std::string& detection_template();
const std::string& annotation_system_template();
const std::string& annotation_user_template();

inline constexpr std::string_view kStartTime = "${startTime}";
inline constexpr std::string_view kEndTime = "${endTime}";
inline constexpr std::string_view kLog = "${preprocessedLog}";
inline constexpr std::string_view kArgumentsList = "${argumentsList.join(', ')}";

std::string render_detection(int start_min, int end_min, std::string_view log, std::string_view arguments_list);

// Python str.format with a single positional field: `{}` is replaced and
// `{{` / `}}` collapse to literal braces.
std::string format_positional(std::string_view tmpl, std::string_view value);

std::string render_annotation_system(std::string_view list_of_arguments);
std::string render_annotation_user(std::string_view comment);

struct DetectionParts {
  std::string start_time;
  std::string end_time;
  std::string log;
  std::string arguments_list;
};

// Inverse of render_detection; nullopt when the text does not follow the
// template.
std::optional<DetectionParts> parse_detection(std::string_view prompt);
std::optional<std::string> parse_annotation_system(std::string_view system_prompt);
std::optional<std::string> parse_annotation_user(std::string_view user_prompt);

// Splits "name: explanation, name: explanation" back into names. An item
// boundary is a ", " whose following segment contains ": ".
std::vector<std::string> split_argument_list(std::string_view joined);
// One "name: explanation" per line.
std::vector<std::string> split_argument_lines(std::string_view lines);

}  // namespace argbot::prompts
