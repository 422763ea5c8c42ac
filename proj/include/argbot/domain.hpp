#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace argbot {

using ParticipantId = std::string;
using GroupId = std::uint64_t;

// Seconds. Absolute values are on the experiment timeline (wall-clock epoch
// in live mode, virtual seconds in simulation); comment timestamps are
// relative to the discussion start.
using Seconds = double;

inline constexpr std::string_view kBotSender = "BOT";

// ---------------------------------------------------------------------------
// Arguments

struct Argument {
  std::string name;
  std::string explanation;

  bool operator==(const Argument&) const = default;
};

class ArgumentCatalog {
 public:
  ArgumentCatalog() = default;

  const std::string& topic() const { return topic_; }
  const std::vector<Argument>& arguments() const { return arguments_; }
  std::size_t size() const { return arguments_.size(); }

  // Case-insensitive lookup on the trimmed name.
  const Argument* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

 private:
  friend ArgumentCatalog validate_catalog(std::vector<Argument> raw, std::string topic);

  std::string topic_;
  std::vector<Argument> arguments_;
};

// Enforces the catalog invariants: at least two arguments, unique names
// (case-insensitive), non-empty explanations. Surrounding whitespace is
// normalized. Names may not contain commas, tabs or newlines because the
// detection reply lists them comma-separated.
ArgumentCatalog validate_catalog(std::vector<Argument> raw, std::string topic = {});

// `name<TAB>explanation` per line; `#` lines are comments, except that a
// `# topic: ...` line sets the catalog topic.
ArgumentCatalog parse_catalog(std::string_view content);
ArgumentCatalog load_catalog(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Conditions

enum class Condition { Control, Participant, Moderator, AIParticipant, AIModerator };

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view s);

// "study1": Control, Participant, Moderator.
// "study2": adds AIParticipant and AIModerator.
std::vector<Condition> condition_profile(std::string_view name);

struct BotIdentity {
  std::string display_name;
  bool highlighted = false;

  bool operator==(const BotIdentity&) const = default;
};

std::optional<BotIdentity> bot_identity(Condition condition);

// ---------------------------------------------------------------------------
// Rooms

struct Comment {
  std::uint64_t id = 0;
  std::string sender;  // participant id or kBotSender
  std::string text;
  Seconds timestamp = 0.0;
  bool bot_generated = false;

  bool operator==(const Comment&) const = default;
};

enum class RoomStatus { Waiting, PreSurvey, Active, PostSurvey, Closed };

std::string_view to_string(RoomStatus s);
RoomStatus parse_room_status(std::string_view s);

struct DiscussionRoom {
  GroupId group_id = 0;
  Condition condition = Condition::Control;
  std::vector<ParticipantId> members;
  std::map<ParticipantId, std::string> pseudonyms;
  std::optional<Seconds> discussion_start;
  Seconds duration = 600.0;
  std::vector<Comment> comments;
  RoomStatus status = RoomStatus::Waiting;

  bool is_member(std::string_view participant) const;
  std::string display_name(std::string_view sender) const;

  bool operator==(const DiscussionRoom&) const = default;
};

// ---------------------------------------------------------------------------
// Participants and surveys

enum class Sex { Male, Female, Other };

std::string_view to_string(Sex s);
Sex parse_sex(std::string_view s);

struct PreSurvey {
  int knowledge = 3;
  int stance = 3;
  int ai_attitude = 3;
  int ideology = 3;
  int age = 0;
  Sex sex = Sex::Other;
  int education = 1;      // ordinal 1-7
  int exp_political = 1;  // 1-5
  int exp_online = 1;     // 1-5

  bool operator==(const PreSurvey&) const = default;
};

struct PostSurvey {
  int viewpoints_range = 3;
  int new_arguments = 3;
  int different_backgrounds = 3;
  int opportunity = 3;
  int repr_own = 3;
  int repr_express = 3;
  int repr_marginalized = 3;

  bool operator==(const PostSurvey&) const = default;
};

struct ParticipantRecord {
  ParticipantId id;
  std::optional<GroupId> group_id;
  std::optional<PreSurvey> pre;
  std::optional<PostSurvey> post;
  std::optional<bool> attention_pre;
  std::optional<bool> attention_post;
  bool technical_failure = false;

  bool operator==(const ParticipantRecord&) const = default;
};

// Survey answer payloads. Throw Error(InvalidArgument) on missing items or
// out-of-range answers; Likert items must be integers in [1,5].
PreSurvey parse_pre_survey(const nlohmann::json& answers);
PostSurvey parse_post_survey(const nlohmann::json& answers);
nlohmann::json to_json(const PreSurvey& s);
nlohmann::json to_json(const PostSurvey& s);

}  // namespace argbot
