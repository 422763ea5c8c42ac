#include "argbot/domain.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot {

const Argument* ArgumentCatalog::find(std::string_view name) const {
  const std::string key = text::trim(name);
  for (const auto& a : arguments_) {
    if (text::iequals(a.name, key)) return &a;
  }
  return nullptr;
}

std::vector<std::string> ArgumentCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(arguments_.size());
  for (const auto& a : arguments_) out.push_back(a.name);
  return out;
}

ArgumentCatalog validate_catalog(std::vector<Argument> raw, std::string topic) {
  ArgumentCatalog catalog;
  catalog.topic_ = text::trim(topic);
  std::set<std::string> seen;
  for (auto& a : raw) {
    a.name = text::trim(a.name);
    a.explanation = text::trim(a.explanation);
    if (a.name.empty()) throw Error(Errc::InvalidCatalog, "argument with empty name");
    if (a.name.find_first_of(",\t\n\r") != std::string::npos) {
      throw Error(Errc::InvalidCatalog, "argument name contains a comma or control character: " + a.name);
    }
    if (a.explanation.empty()) {
      throw Error(Errc::InvalidCatalog, "argument '" + a.name + "' has an empty explanation");
    }
    if (!seen.insert(text::to_lower(a.name)).second) {
      throw Error(Errc::InvalidCatalog, "duplicate argument name: " + a.name);
    }
    catalog.arguments_.push_back(std::move(a));
  }
  if (catalog.arguments_.size() < 2) {
    throw Error(Errc::InvalidCatalog, "catalog needs at least 2 arguments, got " +
                                          std::to_string(catalog.arguments_.size()));
  }
  return catalog;
}

ArgumentCatalog parse_catalog(std::string_view content) {
  std::vector<Argument> raw;
  std::string topic;
  std::size_t line_no = 0;
  for (const auto& line_raw : text::split(content, '\n')) {
    ++line_no;
    std::string line = line_raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      const std::string body = text::trim(std::string_view(trimmed).substr(1));
      if (body.rfind("topic:", 0) == 0) topic = text::trim(std::string_view(body).substr(6));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(Errc::InvalidCatalog, "catalog line " + std::to_string(line_no) + ": expected name<TAB>explanation");
    }
    raw.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return validate_catalog(std::move(raw), std::move(topic));
}

ArgumentCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open catalog file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

// ---------------------------------------------------------------------------

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Control: return "Control";
    case Condition::Participant: return "Participant";
    case Condition::Moderator: return "Moderator";
    case Condition::AIParticipant: return "AIParticipant";
    case Condition::AIModerator: return "AIModerator";
  }
  return "Control";
}

Condition parse_condition(std::string_view s) {
  for (Condition c : {Condition::Control, Condition::Participant, Condition::Moderator,
                      Condition::AIParticipant, Condition::AIModerator}) {
    if (text::iequals(s, to_string(c))) return c;
  }
  throw Error(Errc::InvalidArgument, "unknown condition: " + std::string(s));
}

std::vector<Condition> condition_profile(std::string_view name) {
  if (text::iequals(name, "study1")) {
    return {Condition::Control, Condition::Participant, Condition::Moderator};
  }
  if (text::iequals(name, "study2")) {
    return {Condition::Control, Condition::Participant, Condition::Moderator, Condition::AIParticipant,
            Condition::AIModerator};
  }
  if (text::iequals(name, "control")) return {Condition::Control};
  throw Error(Errc::InvalidConfig, "unknown condition profile: " + std::string(name));
}

std::optional<BotIdentity> bot_identity(Condition condition) {
  switch (condition) {
    case Condition::Control: return std::nullopt;
    case Condition::Participant: return BotIdentity{"Alex", false};
    case Condition::Moderator: return BotIdentity{"Alex (Moderator)", true};
    case Condition::AIParticipant: return BotIdentity{"Alex (AI Participant)", false};
    case Condition::AIModerator: return BotIdentity{"Alex (AI Moderator)", true};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RoomStatus s) {
  switch (s) {
    case RoomStatus::Waiting: return "Waiting";
    case RoomStatus::PreSurvey: return "PreSurvey";
    case RoomStatus::Active: return "Active";
    case RoomStatus::PostSurvey: return "PostSurvey";
    case RoomStatus::Closed: return "Closed";
  }
  return "Waiting";
}

RoomStatus parse_room_status(std::string_view s) {
  for (RoomStatus r : {RoomStatus::Waiting, RoomStatus::PreSurvey, RoomStatus::Active, RoomStatus::PostSurvey,
                       RoomStatus::Closed}) {
    if (s == to_string(r)) return r;
  }
  throw Error(Errc::ParseError, "unknown room status: " + std::string(s));
}

bool DiscussionRoom::is_member(std::string_view participant) const {
  return std::find(members.begin(), members.end(), participant) != members.end();
}

std::string DiscussionRoom::display_name(std::string_view sender) const {
  if (sender == kBotSender) {
    if (auto id = bot_identity(condition)) return id->display_name;
    return std::string(kBotSender);
  }
  auto it = pseudonyms.find(std::string(sender));
  return it != pseudonyms.end() ? it->second : std::string(sender);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::Male: return "male";
    case Sex::Female: return "female";
    case Sex::Other: return "other";
  }
  return "other";
}

Sex parse_sex(std::string_view s) {
  if (text::iequals(s, "male")) return Sex::Male;
  if (text::iequals(s, "female")) return Sex::Female;
  if (text::iequals(s, "other") || text::iequals(s, "prefer not to say")) return Sex::Other;
  throw Error(Errc::InvalidArgument, "unknown sex value: " + std::string(s));
}

namespace {

int read_int(const nlohmann::json& j, const char* key, int lo, int hi) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(Errc::InvalidArgument, std::string("survey item missing: ") + key);
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer()) {
    throw Error(Errc::InvalidArgument, std::string("survey item not an integer: ") + key);
  }
  const auto x = v.get<long long>();
  if (x < lo || x > hi) {
    throw Error(Errc::InvalidArgument, std::string("survey item out of range: ") + key + "=" + std::to_string(x));
  }
  return static_cast<int>(x);
}

int likert(const nlohmann::json& j, const char* key) { return read_int(j, key, 1, 5); }

}  // namespace

PreSurvey parse_pre_survey(const nlohmann::json& answers) {
  PreSurvey s;
  s.knowledge = likert(answers, "knowledge");
  s.stance = likert(answers, "stance");
  s.ai_attitude = likert(answers, "ai_attitude");
  s.ideology = likert(answers, "ideology");
  s.age = read_int(answers, "age", 18, 120);
  if (!answers.contains("sex") || !answers.at("sex").is_string()) {
    throw Error(Errc::InvalidArgument, "survey item missing: sex");
  }
  s.sex = parse_sex(answers.at("sex").get<std::string>());
  s.education = read_int(answers, "education", 1, 7);
  s.exp_political = likert(answers, "exp_political");
  s.exp_online = likert(answers, "exp_online");
  return s;
}

PostSurvey parse_post_survey(const nlohmann::json& answers) {
  PostSurvey s;
  s.viewpoints_range = likert(answers, "viewpoints_range");
  s.new_arguments = likert(answers, "new_arguments");
  s.different_backgrounds = likert(answers, "different_backgrounds");
  s.opportunity = likert(answers, "opportunity");
  s.repr_own = likert(answers, "repr_own");
  s.repr_express = likert(answers, "repr_express");
  s.repr_marginalized = likert(answers, "repr_marginalized");
  return s;
}

nlohmann::json to_json(const PreSurvey& s) {
  return {{"knowledge", s.knowledge},   {"stance", s.stance},
          {"ai_attitude", s.ai_attitude}, {"ideology", s.ideology},
          {"age", s.age},               {"sex", std::string(to_string(s.sex))},
          {"education", s.education},   {"exp_political", s.exp_political},
          {"exp_online", s.exp_online}};
}

nlohmann::json to_json(const PostSurvey& s) {
  return {{"viewpoints_range", s.viewpoints_range},
          {"new_arguments", s.new_arguments},
          {"different_backgrounds", s.different_backgrounds},
          {"opportunity", s.opportunity},
          {"repr_own", s.repr_own},
          {"repr_express", s.repr_express},
          {"repr_marginalized", s.repr_marginalized}};
}

}  // namespace argbot
