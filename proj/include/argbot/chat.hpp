#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "argbot/domain.hpp"

namespace argbot::chat {

enum class EventKind { Joined, PhaseChange, Comment, BotComment, TimerTick, DiscussionEnd };

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct RoomEvent {
  std::uint64_t seq = 0;  // gapless from 1 within a room
  EventKind kind = EventKind::TimerTick;
  Seconds t = 0.0;  // experiment timeline
  nlohmann::json payload;

  bool operator==(const RoomEvent&) const = default;
};

// One JSONL line: {"seq":..,"kind":..,"t":..,"payload":{..}}, no newline.
std::string to_json_line(const RoomEvent& e);
RoomEvent parse_event_line(std::string_view line);

// Discussion-relative time, rounded to microseconds so that timers fired at
// start + offset report the offset exactly.
Seconds elapsed_since(Seconds start, Seconds now);

// Phase name used in client messages: waiting, pre_survey, discussion,
// post_survey, done.
std::string_view client_phase(RoomStatus s);

// Server-to-client wire message for an event.
nlohmann::json wire_event(const RoomEvent& e, const DiscussionRoom& room);

// Rebuilds the room state from its event log. Throws ParseError on gaps or
// events that the live room would have rejected.
DiscussionRoom replay(const std::vector<RoomEvent>& events);

using EventSink = std::function<void(const RoomEvent&)>;

// A discussion room behind a serialized mutation path. Every accepted
// mutation yields one event, which goes to the sink (persistence) and then to
// subscribers, in sequence order and under the room lock. Callbacks must not
// call back into the same room.
class ChatRoom {
 public:
  struct Setup {
    GroupId group_id = 0;
    Condition condition = Condition::Control;
    std::vector<ParticipantId> members;
    std::map<ParticipantId, std::string> pseudonyms;
    Seconds duration = 600.0;
  };

  // Emits the opening phase_change(waiting) and one joined event per member.
  ChatRoom(Setup setup, Seconds now, EventSink sink = {});

  GroupId id() const { return group_id_; }
  Condition condition() const { return condition_; }

  RoomEvent begin_presurvey(Seconds now);
  RoomEvent start_discussion(Seconds now);
  RoomEvent post_comment(std::string_view sender, std::string_view text, Seconds now);
  RoomEvent post_bot_comment(std::string_view text, Seconds now, nlohmann::json extra = nlohmann::json::object());
  RoomEvent timer_tick(nlohmann::json payload, Seconds now);
  RoomEvent close_discussion(Seconds now);
  RoomEvent close(Seconds now);

  std::vector<Comment> transcript() const;
  DiscussionRoom snapshot() const;
  RoomStatus status() const;
  std::vector<RoomEvent> events() const;
  // Seconds since discussion start, or nullopt before it.
  std::optional<Seconds> elapsed(Seconds now) const;

  std::uint64_t subscribe(EventSink callback);
  void unsubscribe(std::uint64_t token);

 private:
  RoomEvent emit(EventKind kind, Seconds now, nlohmann::json payload);
  RoomEvent transition(RoomStatus to, Seconds now, nlohmann::json extra = nlohmann::json::object());
  void require_active(Seconds now) const;

  mutable std::mutex mutex_;
  GroupId group_id_;
  Condition condition_;
  DiscussionRoom room_;
  std::vector<RoomEvent> log_;
  EventSink sink_;
  std::map<std::uint64_t, EventSink> subscribers_;
  std::uint64_t next_token_ = 1;
};

class ChatService {
 public:
  std::shared_ptr<ChatRoom> create_room(ChatRoom::Setup setup, Seconds now, EventSink sink = {});
  // Throws UnknownRoom.
  std::shared_ptr<ChatRoom> room(GroupId id) const;
  bool contains(GroupId id) const;
  std::vector<GroupId> room_ids() const;

 private:
  mutable std::mutex mutex_;
  std::map<GroupId, std::shared_ptr<ChatRoom>> rooms_;
};

}  // namespace argbot::chat
