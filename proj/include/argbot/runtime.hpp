#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "argbot/argument_bot.hpp"
#include "argbot/chat.hpp"
#include "argbot/config.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/orchestrator.hpp"

namespace argbot::store {
class SessionStore;
}

namespace argbot::runtime {

// Time source plus timers. Callbacks run on the owner's event loop.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual Seconds now() const = 0;
  virtual void schedule_at(Seconds when, std::function<void()> fn) = 0;
};

// Simulated time: timers fire in (time, insertion) order and the clock jumps
// straight to each one.
class VirtualClock : public Scheduler {
 public:
  explicit VirtualClock(Seconds start = 0.0) : now_(start) {}

  Seconds now() const override { return now_; }
  // Times in the past are clamped to now.
  void schedule_at(Seconds when, std::function<void()> fn) override;

  bool step();
  void run();
  void run_until(Seconds t);
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Timer {
    Seconds when;
    std::uint64_t order;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Timer& a, const Timer& b) const {
      return a.when != b.when ? a.when > b.when : a.order > b.order;
    }
  };
  Seconds now_;
  std::uint64_t next_order_ = 0;
  std::priority_queue<Timer, std::vector<Timer>, Later> queue_;
};

using CoverageWork = std::function<std::optional<bot::CoverageResult>()>;
using CoverageDone = std::function<void(std::optional<bot::CoverageResult>)>;
// Runs gateway work somewhere and delivers the result back on the event loop.
using Executor = std::function<void(CoverageWork, CoverageDone)>;

// Runs the work in place; for simulation.
Executor inline_executor();

// Hooks run synchronously on the event loop (room events under the room
// lock). They must not call back into the runtime; schedule instead.
struct Listener {
  std::function<void(GroupId, const chat::RoomEvent&)> on_room_event;
  std::function<void(const ParticipantId&, const nlohmann::json&)> on_status;
};

// Surname-style handles shown to other members.
const std::vector<std::string>& pseudonym_pool();

// Waiting room, grouping, randomization, surveys, discussion timers and bot
// injections for one experiment. Not thread-safe: every call must come from
// the event loop that drives the scheduler.
class ExperimentRuntime {
 public:
  ExperimentRuntime(ExperimentConfig config, ArgumentCatalog catalog, Scheduler& scheduler,
                    std::shared_ptr<llm::Gateway> gateway, Executor executor, store::SessionStore* store = nullptr,
                    Listener listener = {}, llm::GatewayPolicy policy = {});
  ~ExperimentRuntime();

  struct JoinResult {
    bool reconnected = false;
    std::optional<GroupId> group;
  };
  // New participants enter the waiting queue; known ones reconnect.
  JoinResult join(const ParticipantId& participant);
  void disconnect(const ParticipantId& participant);
  void submit_survey(const ParticipantId& participant, orchestrator::SurveyPhase phase,
                     const nlohmann::json& answers);
  chat::RoomEvent post(const ParticipantId& participant, std::string_view text);

  const ExperimentConfig& config() const { return config_; }
  const ArgumentCatalog& catalog() const { return catalog_; }
  const orchestrator::ParticipantRegistry& participants() const { return registry_; }
  const orchestrator::WaitingQueue& queue() const { return queue_; }
  chat::ChatService& chat() { return chat_; }
  std::optional<GroupId> group_of(const ParticipantId& participant) const;
  std::size_t rooms_formed() const { return rooms_.size(); }
  std::map<GroupId, std::size_t> room_sizes() const;
  orchestrator::Dataset dataset() const;
  // Rooms not yet Closed.
  std::size_t open_rooms() const;
  // Stops forming rooms once `limit` exist; anyone still waiting, or joining
  // later, is dismissed.
  void set_room_limit(std::size_t limit);

 private:
  struct RoomState {
    std::shared_ptr<chat::ChatRoom> room;
    std::unique_ptr<bot::ArgumentBot> bot;
    std::set<ParticipantId> pre_done;
    std::set<ParticipantId> post_done;
    std::set<ParticipantId> disconnected;
  };

  void try_form();
  void create_room(std::vector<ParticipantId> members);
  void maybe_start(GroupId group);
  void start_discussion(GroupId group);
  void end_discussion(GroupId group);
  void maybe_close(GroupId group);
  void close_room(GroupId group);
  void fire_injection(GroupId group, std::size_t slot);
  void finish_injection(GroupId group, std::size_t slot, std::optional<bot::CoverageResult> coverage);
  void check_disconnect(GroupId group, const ParticipantId& participant);
  void log_participant(nlohmann::json event);
  void status(const ParticipantId& participant, nlohmann::json message);
  RoomState& state(GroupId group);

  ExperimentConfig config_;
  ArgumentCatalog catalog_;
  Scheduler& scheduler_;
  std::shared_ptr<llm::Gateway> gateway_;
  Executor executor_;
  store::SessionStore* store_;
  Listener listener_;
  llm::GatewayPolicy policy_;

  orchestrator::WaitingQueue queue_;
  orchestrator::ParticipantRegistry registry_;
  chat::ChatService chat_;
  std::map<GroupId, RoomState> rooms_;
  GroupId next_group_ = 1;
  std::optional<std::size_t> room_limit_;
  std::shared_ptr<bool> alive_;
};

}  // namespace argbot::runtime
