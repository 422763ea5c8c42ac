#include "argbot/chat.hpp"

#include <cmath>

#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot::chat {

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::Joined, "joined"},       {EventKind::PhaseChange, "phase_change"},
    {EventKind::Comment, "comment"},     {EventKind::BotComment, "bot_comment"},
    {EventKind::TimerTick, "timer_tick"}, {EventKind::DiscussionEnd, "discussion_end"},
};

nlohmann::json comment_payload(const DiscussionRoom& room, const Comment& c) {
  return {{"id", c.id},
          {"sender", c.sender},
          {"display", room.display_name(c.sender)},
          {"text", c.text},
          {"timestamp", c.timestamp},
          {"bot_generated", c.bot_generated}};
}

}  // namespace

Seconds elapsed_since(Seconds start, Seconds now) { return std::round((now - start) * 1e6) / 1e6; }

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw Error(Errc::ParseError, "unknown event kind: " + std::string(s));
}

std::string to_json_line(const RoomEvent& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["kind"] = to_string(e.kind);
  j["t"] = e.t;
  j["payload"] = e.payload;
  return j.dump();
}

RoomEvent parse_event_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::ParseError, "event line is not a JSON object");
  try {
    RoomEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.t = j.at("t").get<double>();
    e.payload = j.at("payload");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ParseError, std::string("malformed event line: ") + ex.what());
  }
}

std::string_view client_phase(RoomStatus s) {
  switch (s) {
    case RoomStatus::Waiting: return "waiting";
    case RoomStatus::PreSurvey: return "pre_survey";
    case RoomStatus::Active: return "discussion";
    case RoomStatus::PostSurvey: return "post_survey";
    case RoomStatus::Closed: return "done";
  }
  return "waiting";
}

nlohmann::json wire_event(const RoomEvent& e, const DiscussionRoom& room) {
  nlohmann::json w = {{"type", "event"}, {"kind", to_string(e.kind)}, {"seq", e.seq}, {"sender_display", ""},
                      {"highlighted", false}, {"text", ""}, {"t", 0.0}};
  if (room.discussion_start) w["t"] = elapsed_since(*room.discussion_start, e.t);
  const auto& p = e.payload;
  switch (e.kind) {
    case EventKind::Comment:
    case EventKind::BotComment:
      w["sender_display"] = p.value("display", "");
      w["text"] = p.value("text", "");
      w["t"] = p.value("timestamp", 0.0);
      w["highlighted"] = p.value("highlighted", false);
      break;
    case EventKind::Joined:
      w["sender_display"] = p.value("display", "");
      break;
    case EventKind::PhaseChange:
      w["phase"] = client_phase(parse_room_status(p.value("status", "Waiting")));
      if (p.contains("duration")) w["duration"] = p["duration"];
      break;
    case EventKind::TimerTick:
      w["timer"] = p.value("timer", "");
      break;
    case EventKind::DiscussionEnd:
      break;
  }
  return w;
}

// ---------------------------------------------------------------------------

ChatRoom::ChatRoom(Setup setup, Seconds now, EventSink sink)
    : group_id_(setup.group_id), condition_(setup.condition), sink_(std::move(sink)) {
  if (setup.members.empty()) throw Error(Errc::InvalidArgument, "room needs members");
  room_.group_id = setup.group_id;
  room_.condition = setup.condition;
  room_.members = std::move(setup.members);
  room_.pseudonyms = std::move(setup.pseudonyms);
  room_.duration = setup.duration;
  room_.status = RoomStatus::Waiting;

  std::lock_guard lock(mutex_);
  emit(EventKind::PhaseChange, now,
       {{"status", to_string(RoomStatus::Waiting)},
        {"group_id", room_.group_id},
        {"condition", to_string(room_.condition)},
        {"members", room_.members},
        {"pseudonyms", room_.pseudonyms},
        {"duration", room_.duration}});
  for (const auto& m : room_.members) {
    emit(EventKind::Joined, now, {{"participant", m}, {"display", room_.display_name(m)}});
  }
}

RoomEvent ChatRoom::emit(EventKind kind, Seconds now, nlohmann::json payload) {
  RoomEvent e{log_.size() + 1, kind, now, std::move(payload)};
  log_.push_back(e);
  if (sink_) sink_(e);
  for (const auto& [token, cb] : subscribers_) cb(e);
  return e;
}

RoomEvent ChatRoom::transition(RoomStatus to, Seconds now, nlohmann::json extra) {
  if (static_cast<int>(to) != static_cast<int>(room_.status) + 1) {
    throw Error(Errc::IllegalTransition, "room " + std::to_string(group_id_) + ": " +
                                             std::string(to_string(room_.status)) + " -> " +
                                             std::string(to_string(to)));
  }
  room_.status = to;
  extra["status"] = to_string(to);
  return emit(EventKind::PhaseChange, now, std::move(extra));
}

void ChatRoom::require_active(Seconds now) const {
  if (room_.status != RoomStatus::Active) {
    throw Error(Errc::RoomNotActive, "room " + std::to_string(group_id_) + " is " +
                                         std::string(to_string(room_.status)));
  }
  // Compared against the absolute end so a timer set for start + duration
  // lands exactly on the boundary.
  if (now < *room_.discussion_start || now >= *room_.discussion_start + room_.duration) {
    throw Error(Errc::RoomNotActive, "room " + std::to_string(group_id_) + ": discussion window is over");
  }
}

RoomEvent ChatRoom::begin_presurvey(Seconds now) {
  std::lock_guard lock(mutex_);
  return transition(RoomStatus::PreSurvey, now);
}

RoomEvent ChatRoom::start_discussion(Seconds now) {
  std::lock_guard lock(mutex_);
  if (room_.status != RoomStatus::PreSurvey) {
    throw Error(Errc::IllegalTransition, "discussion can only start after the pre-survey");
  }
  room_.discussion_start = now;
  return transition(RoomStatus::Active, now, {{"discussion_start", now}});
}

RoomEvent ChatRoom::post_comment(std::string_view sender, std::string_view body, Seconds now) {
  std::lock_guard lock(mutex_);
  if (!room_.is_member(sender)) {
    throw Error(Errc::NotMember, std::string(sender) + " is not a member of room " + std::to_string(group_id_));
  }
  require_active(now);
  if (text::trim(body).empty()) throw Error(Errc::EmptyText, "empty comment");
  Comment c{room_.comments.size() + 1, std::string(sender), std::string(body),
            elapsed_since(*room_.discussion_start, now), false};
  room_.comments.push_back(c);
  return emit(EventKind::Comment, now, comment_payload(room_, c));
}

RoomEvent ChatRoom::post_bot_comment(std::string_view body, Seconds now, nlohmann::json extra) {
  std::lock_guard lock(mutex_);
  const auto identity = bot_identity(condition_);
  if (!identity) throw Error(Errc::ControlRoom, "control room " + std::to_string(group_id_) + " has no bot");
  require_active(now);
  if (text::trim(body).empty()) throw Error(Errc::EmptyText, "empty bot comment");
  Comment c{room_.comments.size() + 1, std::string(kBotSender), std::string(body),
            elapsed_since(*room_.discussion_start, now), true};
  room_.comments.push_back(c);
  auto payload = comment_payload(room_, c);
  payload["highlighted"] = identity->highlighted;
  for (auto& [k, v] : extra.items()) payload[k] = v;
  return emit(EventKind::BotComment, now, std::move(payload));
}

RoomEvent ChatRoom::timer_tick(nlohmann::json payload, Seconds now) {
  std::lock_guard lock(mutex_);
  return emit(EventKind::TimerTick, now, std::move(payload));
}

RoomEvent ChatRoom::close_discussion(Seconds now) {
  std::lock_guard lock(mutex_);
  if (room_.status != RoomStatus::Active) {
    throw Error(Errc::IllegalTransition, "room " + std::to_string(group_id_) + " is not in discussion");
  }
  const Seconds rel = elapsed_since(*room_.discussion_start, now);
  if (now < *room_.discussion_start + room_.duration) {
    throw Error(Errc::PrematureClose, "discussion in room " + std::to_string(group_id_) + " has " +
                                          std::to_string(room_.duration - rel) + " s left");
  }
  emit(EventKind::DiscussionEnd, now, {{"elapsed", rel}, {"comments", room_.comments.size()}});
  return transition(RoomStatus::PostSurvey, now);
}

RoomEvent ChatRoom::close(Seconds now) {
  std::lock_guard lock(mutex_);
  return transition(RoomStatus::Closed, now);
}

std::vector<Comment> ChatRoom::transcript() const {
  std::lock_guard lock(mutex_);
  if (room_.status < RoomStatus::Active) {
    throw Error(Errc::PhaseMismatch, "room " + std::to_string(group_id_) + " has no discussion yet");
  }
  return room_.comments;
}

DiscussionRoom ChatRoom::snapshot() const {
  std::lock_guard lock(mutex_);
  return room_;
}

RoomStatus ChatRoom::status() const {
  std::lock_guard lock(mutex_);
  return room_.status;
}

std::vector<RoomEvent> ChatRoom::events() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::optional<Seconds> ChatRoom::elapsed(Seconds now) const {
  std::lock_guard lock(mutex_);
  if (!room_.discussion_start) return std::nullopt;
  return elapsed_since(*room_.discussion_start, now);
}

std::uint64_t ChatRoom::subscribe(EventSink callback) {
  std::lock_guard lock(mutex_);
  const auto token = next_token_++;
  subscribers_.emplace(token, std::move(callback));
  return token;
}

void ChatRoom::unsubscribe(std::uint64_t token) {
  std::lock_guard lock(mutex_);
  subscribers_.erase(token);
}

// ---------------------------------------------------------------------------

DiscussionRoom replay(const std::vector<RoomEvent>& events) {
  DiscussionRoom room;
  if (events.empty()) throw Error(Errc::ParseError, "empty room log");
  auto fail = [](std::uint64_t seq, const std::string& why) {
    throw Error(Errc::ParseError, "room log event " + std::to_string(seq) + ": " + why);
  };
  try {
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (e.seq != i + 1) fail(e.seq, "sequence gap, expected " + std::to_string(i + 1));
      const auto& p = e.payload;
      switch (e.kind) {
        case EventKind::PhaseChange: {
          const auto to = parse_room_status(p.at("status").get<std::string>());
          if (i == 0) {
            if (to != RoomStatus::Waiting) fail(e.seq, "log must open in waiting");
            room.group_id = p.at("group_id").get<GroupId>();
            room.condition = parse_condition(p.at("condition").get<std::string>());
            room.members = p.at("members").get<std::vector<ParticipantId>>();
            room.pseudonyms = p.at("pseudonyms").get<std::map<ParticipantId, std::string>>();
            room.duration = p.at("duration").get<double>();
            room.status = RoomStatus::Waiting;
            break;
          }
          if (static_cast<int>(to) != static_cast<int>(room.status) + 1) fail(e.seq, "backward phase change");
          if (to == RoomStatus::Active) room.discussion_start = p.at("discussion_start").get<double>();
          room.status = to;
          break;
        }
        case EventKind::Comment:
        case EventKind::BotComment: {
          if (room.status != RoomStatus::Active) fail(e.seq, "comment outside the discussion");
          Comment c;
          c.id = p.at("id").get<std::uint64_t>();
          c.sender = p.at("sender").get<std::string>();
          c.text = p.at("text").get<std::string>();
          c.timestamp = p.at("timestamp").get<double>();
          c.bot_generated = p.at("bot_generated").get<bool>();
          if (c.id != room.comments.size() + 1) fail(e.seq, "comment id gap");
          if (c.bot_generated != (e.kind == EventKind::BotComment)) fail(e.seq, "bot flag mismatch");
          if (c.bot_generated ? room.condition == Condition::Control : !room.is_member(c.sender)) {
            fail(e.seq, "sender not allowed");
          }
          room.comments.push_back(std::move(c));
          break;
        }
        case EventKind::Joined:
          if (!room.is_member(p.at("participant").get<std::string>())) fail(e.seq, "join by non-member");
          break;
        case EventKind::TimerTick:
        case EventKind::DiscussionEnd:
          break;
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ParseError, std::string("room log payload: ") + ex.what());
  }
  return room;
}

// ---------------------------------------------------------------------------

std::shared_ptr<ChatRoom> ChatService::create_room(ChatRoom::Setup setup, Seconds now, EventSink sink) {
  std::lock_guard lock(mutex_);
  const auto id = setup.group_id;
  if (rooms_.contains(id)) throw Error(Errc::InvalidArgument, "room " + std::to_string(id) + " already exists");
  auto room = std::make_shared<ChatRoom>(std::move(setup), now, std::move(sink));
  rooms_.emplace(id, room);
  return room;
}

std::shared_ptr<ChatRoom> ChatService::room(GroupId id) const {
  std::lock_guard lock(mutex_);
  auto it = rooms_.find(id);
  if (it == rooms_.end()) throw Error(Errc::UnknownRoom, "unknown room " + std::to_string(id));
  return it->second;
}

bool ChatService::contains(GroupId id) const {
  std::lock_guard lock(mutex_);
  return rooms_.contains(id);
}

std::vector<GroupId> ChatService::room_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<GroupId> ids;
  for (const auto& [id, r] : rooms_) ids.push_back(id);
  return ids;
}

}  // namespace argbot::chat
