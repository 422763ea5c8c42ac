#include "argbot/runtime.hpp"

#include <spdlog/spdlog.h>

#include "argbot/error.hpp"
#include "argbot/store.hpp"

namespace argbot::runtime {

using orchestrator::SurveyPhase;

void VirtualClock::schedule_at(Seconds when, std::function<void()> fn) {
  queue_.push(Timer{std::max(when, now_), next_order_++, std::move(fn)});
}

bool VirtualClock::step() {
  if (queue_.empty()) return false;
  Timer t = queue_.top();
  queue_.pop();
  now_ = t.when;
  t.fn();
  return true;
}

void VirtualClock::run() {
  while (step()) {
  }
}

void VirtualClock::run_until(Seconds t) {
  while (!queue_.empty() && queue_.top().when <= t) step();
  now_ = std::max(now_, t);
}

Executor inline_executor() {
  return [](CoverageWork work, CoverageDone done) { done(work()); };
}

const std::vector<std::string>& pseudonym_pool() {
  static const std::vector<std::string> pool = {
      "Baldwin", "Lujan",  "Comer",  "Terry",     "Woodruff", "Bravo",    "Morales",
      "Mcelroy", "Hughes", "Patel",  "Jensen",    "Okafor",   "Lindqvist", "Moreau",
      "Castillo", "Nakamura", "Fischer", "Brennan", "Duarte", "Whitfield",
  };
  return pool;
}

// ---------------------------------------------------------------------------

ExperimentRuntime::ExperimentRuntime(ExperimentConfig config, ArgumentCatalog catalog, Scheduler& scheduler,
                                     std::shared_ptr<llm::Gateway> gateway, Executor executor,
                                     store::SessionStore* store, Listener listener, llm::GatewayPolicy policy)
    : config_(std::move(config)),
      catalog_(std::move(catalog)),
      scheduler_(scheduler),
      gateway_(std::move(gateway)),
      executor_(std::move(executor)),
      store_(store),
      listener_(std::move(listener)),
      policy_(policy),
      alive_(std::make_shared<bool>(true)) {
  config_.validate();
  if (!executor_) executor_ = inline_executor();
  if (static_cast<std::size_t>(config_.target_group_size) > pseudonym_pool().size()) {
    throw Error(Errc::InvalidConfig, "group size exceeds the pseudonym pool");
  }
}

ExperimentRuntime::~ExperimentRuntime() { *alive_ = false; }

void ExperimentRuntime::log_participant(nlohmann::json event) {
  event["t"] = scheduler_.now();
  if (store_) store_->append_participant_event(event);
}

void ExperimentRuntime::status(const ParticipantId& participant, nlohmann::json message) {
  message["type"] = "status";
  if (listener_.on_status) listener_.on_status(participant, message);
}

ExperimentRuntime::RoomState& ExperimentRuntime::state(GroupId group) {
  auto it = rooms_.find(group);
  if (it == rooms_.end()) throw Error(Errc::UnknownRoom, "unknown room " + std::to_string(group));
  return it->second;
}

std::optional<GroupId> ExperimentRuntime::group_of(const ParticipantId& participant) const {
  const auto* rec = registry_.find(participant);
  return rec ? rec->group_id : std::nullopt;
}

std::map<GroupId, std::size_t> ExperimentRuntime::room_sizes() const {
  std::map<GroupId, std::size_t> sizes;
  for (const auto& [id, st] : rooms_) sizes[id] = st.room->snapshot().members.size();
  return sizes;
}

orchestrator::Dataset ExperimentRuntime::dataset() const { return {registry_.list(), room_sizes()}; }

std::size_t ExperimentRuntime::open_rooms() const {
  std::size_t n = 0;
  for (const auto& [id, st] : rooms_) n += st.room->status() != RoomStatus::Closed;
  return n;
}

ExperimentRuntime::JoinResult ExperimentRuntime::join(const ParticipantId& participant) {
  if (const auto* rec = registry_.find(participant)) {
    JoinResult r{true, rec->group_id};
    if (rec->group_id) {
      state(*rec->group_id).disconnected.erase(participant);
      status(participant, {{"phase", chat::client_phase(state(*rec->group_id).room->status())}, {"group_id", *rec->group_id}});
    } else if (queue_.seen(participant)) {
      // Still waiting (or dismissed); a second tab changes nothing.
      status(participant, {{"phase", "waiting"}});
    }
    return r;
  }
  const Seconds now = scheduler_.now();
  queue_.enqueue(participant, now);
  registry_.add(participant);
  log_participant({{"event", "enqueued"}, {"participant", participant}});
  status(participant, {{"phase", "waiting"}, {"waiting_cap", config_.waiting_cap}});
  scheduler_.schedule_at(now + config_.waiting_cap, [this] { try_form(); });
  try_form();
  return {};
}

void ExperimentRuntime::disconnect(const ParticipantId& participant) {
  const auto* rec = registry_.find(participant);
  if (!rec) return;
  if (!rec->group_id) {
    if (queue_.remove(participant)) {
      log_participant({{"event", "dismissed"}, {"participant", participant}, {"reason", "left"}});
    }
    return;
  }
  const GroupId group = *rec->group_id;
  auto& st = state(group);
  const auto room_status = st.room->status();
  if (room_status == RoomStatus::Closed) return;
  st.disconnected.insert(participant);
  scheduler_.schedule_at(scheduler_.now() + config_.reconnect_grace,
                         [this, group, participant] { check_disconnect(group, participant); });
  if (room_status == RoomStatus::PreSurvey) maybe_start(group);
  if (room_status == RoomStatus::PostSurvey) maybe_close(group);
}

void ExperimentRuntime::check_disconnect(GroupId group, const ParticipantId& participant) {
  auto& st = state(group);
  if (!st.disconnected.contains(participant)) return;
  auto& rec = registry_.at(participant);
  if (rec.technical_failure || st.post_done.contains(participant)) return;
  rec.technical_failure = true;
  log_participant({{"event", "technical_failure"}, {"participant", participant}});
}

void ExperimentRuntime::set_room_limit(std::size_t limit) {
  room_limit_ = limit;
  try_form();
}

void ExperimentRuntime::try_form() {
  while (true) {
    if (room_limit_ && rooms_.size() >= *room_limit_) {
      for (const auto& e : std::vector(queue_.entries())) {
        queue_.remove(e.participant);
        log_participant({{"event", "dismissed"}, {"participant", e.participant}, {"reason", "intake_closed"}});
        status(e.participant, {{"phase", "dismissed"}});
      }
      return;
    }
    auto formation = queue_.try_form_group(scheduler_.now(), config_);
    for (const auto& p : formation.dismissed) {
      log_participant({{"event", "dismissed"}, {"participant", p}, {"reason", "small_group"}});
      status(p, {{"phase", "dismissed"}});
    }
    if (!formation.group) return;
    create_room(std::move(*formation.group));
  }
}

void ExperimentRuntime::create_room(std::vector<ParticipantId> members) {
  const GroupId group = next_group_++;
  const Seconds now = scheduler_.now();
  const Condition condition = config_.assignment == "blocked"
                                  ? orchestrator::assign_condition_blocked(group, config_.seed, config_.conditions)
                                  : orchestrator::assign_condition(group, config_.seed, config_.conditions);

  // Partial Fisher-Yates over the pool.
  auto names = pseudonym_pool();
  auto rng = Rng::stream(config_.seed, "pseudonyms", group);
  chat::ChatRoom::Setup setup;
  setup.group_id = group;
  setup.condition = condition;
  setup.duration = config_.discussion_duration;
  for (std::size_t i = 0; i < members.size(); ++i) {
    std::swap(names[i], names[i + rng.uniform_index(names.size() - i)]);
    setup.pseudonyms[members[i]] = names[i];
  }
  setup.members = members;

  chat::EventSink sink = [this, group](const chat::RoomEvent& e) {
    if (store_) store_->append_event(group, e);
    if (listener_.on_room_event) listener_.on_room_event(group, e);
  };
  RoomState st;
  st.room = chat_.create_room(std::move(setup), now, std::move(sink));
  if (condition != Condition::Control) {
    st.bot = std::make_unique<bot::ArgumentBot>(catalog_, group, config_.seed, config_.injection_times);
  }
  auto& placed = rooms_.emplace(group, std::move(st)).first->second;

  for (const auto& m : members) {
    registry_.at(m).group_id = group;
    log_participant({{"event", "assigned"}, {"participant", m}, {"group", group}});
  }
  placed.room->begin_presurvey(now);
  const auto snap = placed.room->snapshot();
  for (const auto& m : members) {
    status(m, {{"phase", "pre_survey"}, {"group_id", group}, {"display", snap.display_name(m)}});
  }
  scheduler_.schedule_at(now + config_.survey_timeout, [this, group] {
    if (state(group).room->status() == RoomStatus::PreSurvey) start_discussion(group);
  });
}

void ExperimentRuntime::submit_survey(const ParticipantId& participant, SurveyPhase phase,
                                      const nlohmann::json& answers) {
  auto& rec = registry_.at(participant);
  if (!rec.group_id) throw Error(Errc::PhaseMismatch, participant + " is not in a group yet");
  const GroupId group = *rec.group_id;
  auto& st = state(group);
  auto& done = phase == SurveyPhase::Pre ? st.pre_done : st.post_done;
  if (done.contains(participant)) {
    throw Error(Errc::PhaseMismatch, participant + " already submitted the " + std::string(to_string(phase)) +
                                         " survey");
  }
  const auto room_status = st.room->status();
  const int expected = phase == SurveyPhase::Pre ? config_.attention_pre_answer : config_.attention_post_answer;
  // A missing attention item counts as a failed check.
  const bool passed = answers.is_object() && answers.contains("attention_check") &&
                      answers["attention_check"].is_number_integer() &&
                      answers["attention_check"].get<int>() == expected;
  nlohmann::json normalized;
  if (phase == SurveyPhase::Pre) {
    auto parsed = parse_pre_survey(answers);
    registry_.record_attention_check(participant, phase, passed, room_status);
    rec.pre = parsed;
    normalized = to_json(parsed);
  } else {
    auto parsed = parse_post_survey(answers);
    registry_.record_attention_check(participant, phase, passed, room_status);
    rec.post = parsed;
    normalized = to_json(parsed);
  }
  done.insert(participant);
  log_participant({{"event", "survey"},
                   {"participant", participant},
                   {"phase", to_string(phase)},
                   {"answers", normalized},
                   {"attention", passed}});
  if (phase == SurveyPhase::Pre) {
    maybe_start(group);
  } else {
    status(participant, {{"phase", "done"}});
    maybe_close(group);
  }
}

void ExperimentRuntime::maybe_start(GroupId group) {
  auto& st = state(group);
  if (st.room->status() != RoomStatus::PreSurvey) return;
  for (const auto& m : st.room->snapshot().members) {
    if (!st.pre_done.contains(m) && !st.disconnected.contains(m)) return;
  }
  start_discussion(group);
}

void ExperimentRuntime::start_discussion(GroupId group) {
  auto& st = state(group);
  const Seconds start = scheduler_.now();
  st.room->start_discussion(start);
  for (const auto& m : st.room->snapshot().members) {
    status(m, {{"phase", "discussion"}, {"group_id", group}, {"duration", config_.discussion_duration}});
  }
  if (st.bot) {
    for (std::size_t slot = 0; slot < config_.injection_times.size(); ++slot) {
      scheduler_.schedule_at(start + config_.injection_times[slot], [this, group, slot] { fire_injection(group, slot); });
    }
  }
  scheduler_.schedule_at(start + config_.discussion_duration, [this, group] { end_discussion(group); });
}

void ExperimentRuntime::fire_injection(GroupId group, std::size_t slot) {
  auto& st = state(group);
  if (st.room->status() != RoomStatus::Active) return;
  const Seconds now = scheduler_.now();
  const auto snap = st.room->snapshot();
  const Seconds elapsed = chat::elapsed_since(*snap.discussion_start, now);
  st.room->timer_tick({{"timer", "injection"}, {"slot", slot}, {"scheduled", config_.injection_times[slot]},
                       {"elapsed", elapsed}},
                      now);
  auto prompt = st.bot->prompt_for(snap, elapsed);
  std::weak_ptr<bool> alive = alive_;
  executor_(
      [gateway = gateway_, prompt = std::move(prompt), catalog = &catalog_, policy = policy_]() {
        return bot::fetch_coverage(*gateway, prompt, *catalog, policy);
      },
      [this, alive, group, slot](std::optional<bot::CoverageResult> coverage) {
        auto flag = alive.lock();
        if (!flag || !*flag) return;
        finish_injection(group, slot, std::move(coverage));
      });
}

void ExperimentRuntime::finish_injection(GroupId group, std::size_t slot, std::optional<bot::CoverageResult> coverage) {
  auto& st = state(group);
  const Seconds now = scheduler_.now();
  auto outcome = st.bot->resolve(slot, std::move(coverage));
  if (!outcome.argument) {
    st.room->timer_tick({{"timer", "injection_skipped"}, {"slot", slot}, {"reason", "no_missing_argument"}}, now);
    return;
  }
  try {
    st.room->post_bot_comment(outcome.message, now,
                              {{"argument", outcome.argument->name}, {"slot", slot}, {"fallback", outcome.fallback}});
  } catch (const Error& e) {
    if (e.code() != Errc::RoomNotActive) throw;
    st.room->timer_tick({{"timer", "injection_skipped"}, {"slot", slot}, {"reason", "discussion_over"}}, now);
  }
}

chat::RoomEvent ExperimentRuntime::post(const ParticipantId& participant, std::string_view text) {
  const auto group = group_of(participant);
  if (!group) throw Error(Errc::RoomNotActive, participant + " is not in a room");
  return state(*group).room->post_comment(participant, text, scheduler_.now());
}

void ExperimentRuntime::end_discussion(GroupId group) {
  auto& st = state(group);
  const Seconds now = scheduler_.now();
  st.room->close_discussion(now);
  for (const auto& m : st.room->snapshot().members) status(m, {{"phase", "post_survey"}, {"group_id", group}});
  scheduler_.schedule_at(now + config_.survey_timeout, [this, group] { close_room(group); });
  maybe_close(group);
}

void ExperimentRuntime::maybe_close(GroupId group) {
  auto& st = state(group);
  if (st.room->status() != RoomStatus::PostSurvey) return;
  for (const auto& m : st.room->snapshot().members) {
    if (!st.post_done.contains(m) && !st.disconnected.contains(m)) return;
  }
  close_room(group);
}

void ExperimentRuntime::close_room(GroupId group) {
  auto& st = state(group);
  if (st.room->status() != RoomStatus::PostSurvey) return;
  st.room->close(scheduler_.now());
  if (store_) store_->close_room(group);
}

}  // namespace argbot::runtime
