#include "argbot/simulation.hpp"

#include <algorithm>
#include <memory>
#include <set>

#include <nlohmann/json.hpp>

#include "argbot/error.hpp"
#include "argbot/rng.hpp"
#include "argbot/runtime.hpp"
#include "argbot/store.hpp"
#include "argbot/text.hpp"

namespace argbot::sim {

nlohmann::json to_json(const PlantedComment& p) {
  return {{"group_id", p.group_id},
          {"comment_id", p.comment_id},
          {"sender", p.sender},
          {"arguments", p.arguments},
          {"adoption", p.adoption}};
}

PlantedComment planted_from_json(const nlohmann::json& j) {
  try {
    return {j.at("group_id").get<GroupId>(), j.at("comment_id").get<std::uint64_t>(),
            j.at("sender").get<std::string>(), j.at("arguments").get<std::vector<std::string>>(),
            j.value("adoption", false)};
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ParseError, std::string("ground truth record: ") + ex.what());
  }
}

const std::vector<std::string>& argument_templates() {
  static const std::vector<std::string> t = {
      "I think {kw} matters a lot here",
      "what about {kw}?",
      "one thing nobody has said yet is {kw}",
      "for me the big issue is {kw}",
      "we should not forget {kw}",
      "{kw} is something I keep coming back to",
  };
  return t;
}

const std::vector<std::string>& adoption_templates() {
  static const std::vector<std::string> t = {
      "good point about {kw}",
      "yes, {kw} is worth thinking about",
      "agreed, {kw} matters",
  };
  return t;
}

const std::vector<std::string>& filler_lines() {
  static const std::vector<std::string> t = {
      "hello everyone", "good point", "I agree with that", "not sure about this one", "interesting",
      "hmm, hard to say", "that makes sense", "I see it differently", "fair enough", "can you say more?",
  };
  return t;
}

const std::vector<std::string>& padding_words() {
  static const std::vector<std::string> t = {
      "really", "quite", "honestly", "I", "mean", "so", "yeah", "well", "maybe", "perhaps", "basically", "anyway",
  };
  return t;
}

namespace {

class Agent {
 public:
  Agent(ParticipantId id, Rng rng, std::vector<std::string> pool)
      : id_(std::move(id)), rng_(std::move(rng)), pool_(std::move(pool)) {}

  const ParticipantId& id() const { return id_; }
  Rng& rng() { return rng_; }
  bool gone() const { return gone_; }
  void leave() { gone_ = true; }

  // Unexpressed pool argument, or none once the pool is used up.
  std::optional<std::string> next_argument() {
    std::vector<std::string> open;
    for (const auto& a : pool_) {
      if (!expressed_.contains(a) && !intended_.contains(a)) open.push_back(a);
    }
    if (open.empty()) return std::nullopt;
    return open[rng_.uniform_index(open.size())];
  }
  // Commits to voicing an injected argument later; false if it is already
  // spoken for.
  bool intend(const std::string& arg) {
    if (expressed_.contains(arg) || intended_.contains(arg)) return false;
    intended_.insert(arg);
    return true;
  }
  void expressed(const std::string& arg) {
    intended_.erase(arg);
    expressed_.insert(arg);
  }

 private:
  ParticipantId id_;
  Rng rng_;
  std::vector<std::string> pool_;
  std::set<std::string> expressed_;
  std::set<std::string> intended_;
  bool gone_ = false;
};

class Simulator {
 public:
  Simulator(const FileConfig& config, const ArgumentCatalog& catalog, const llm::AliasTable& aliases,
            store::SessionStore* store)
      : config_(config),
        catalog_(catalog),
        aliases_(aliases),
        store_(store),
        gateway_(std::make_shared<llm::Gateway>(std::make_shared<llm::MockBackend>(aliases))),
        arrivals_(Rng::stream(config.experiment.seed, "arrivals")) {
    const auto& s = config_.sim;
    target_rooms_ = static_cast<std::size_t>(s.groups_per_condition) * config_.experiment.conditions.size();
    runtime::Listener listener;
    listener.on_room_event = [this](GroupId g, const chat::RoomEvent& e) { on_room_event(g, e); };
    llm::GatewayPolicy policy;
    policy.retries = 0;
    runtime_ = std::make_unique<runtime::ExperimentRuntime>(config_.experiment, catalog_, clock_, gateway_,
                                                            runtime::inline_executor(), store_, listener, policy);
    runtime_->set_room_limit(target_rooms_);
  }

  SimResult run() {
    clock_.schedule_at(0.0, [this] { arrive(); });
    while (clock_.step()) ++timers_;
    SimResult out;
    for (auto id : runtime_->chat().room_ids()) out.rooms.emplace(id, runtime_->chat().room(id)->snapshot());
    out.participants = runtime_->participants();
    out.ground_truth = std::move(truth_);
    std::sort(out.ground_truth.begin(), out.ground_truth.end(), [](const auto& a, const auto& b) {
      return std::tie(a.group_id, a.comment_id) < std::tie(b.group_id, b.comment_id);
    });
    out.end_time = clock_.now();
    out.timers_fired = timers_;
    return out;
  }

 private:
  Agent& agent(const ParticipantId& id) { return *agents_.at(id); }

  std::vector<std::string> draw_pool(Rng& rng) {
    auto names = catalog_.names();
    const auto k = static_cast<std::size_t>(config_.sim.pool_size);
    if (k == 0 || k >= names.size()) return names;
    for (std::size_t i = 0; i < k; ++i) std::swap(names[i], names[i + rng.uniform_index(names.size() - i)]);
    names.resize(k);
    return names;
  }

  void arrive() {
    if (runtime_->rooms_formed() >= target_rooms_) return;
    const std::uint64_t index = next_agent_++;
    const ParticipantId id = "p" + std::to_string(index);
    auto rng = Rng::stream(config_.experiment.seed, "agent", index);
    auto pool = draw_pool(rng);
    agents_.emplace(id, std::make_unique<Agent>(id, std::move(rng), std::move(pool)));
    runtime_->join(id);
    if (runtime_->rooms_formed() < target_rooms_) {
      clock_.schedule_at(clock_.now() + arrivals_.exponential(config_.sim.arrival_mean), [this] { arrive(); });
    }
  }

  std::string keyword_for(const std::string& argument, Rng& rng) {
    const auto kws = aliases_.keywords(argument);
    return kws[rng.uniform_index(kws.size())];
  }

  std::string pad(std::string text, Rng& rng) {
    const auto target = rng.poisson(config_.sim.verbosity);
    const auto& words = padding_words();
    std::size_t have = text::count_tokens(text);
    while (have < target) {
      text += " " + words[rng.uniform_index(words.size())];
      ++have;
    }
    return text;
  }

  void post(GroupId group, const ParticipantId& id, const std::string& text, std::vector<std::string> planted,
            bool adoption) {
    auto event = runtime_->post(id, text);
    truth_.push_back({group, event.payload.at("id").get<std::uint64_t>(), id, std::move(planted), adoption});
  }

  nlohmann::json pre_answers(Agent& a) {
    auto& r = a.rng();
    auto likert = [&] { return static_cast<int>(1 + r.uniform_index(5)); };
    const double u = r.uniform01();
    const char* sex = u < config_.sim.p_sex_other ? "other"
                      : r.bernoulli(0.5)          ? "male"
                                                  : "female";
    nlohmann::json j = {{"knowledge", likert()},
                        {"stance", likert()},
                        {"ai_attitude", likert()},
                        {"ideology", likert()},
                        {"age", static_cast<int>(18 + r.uniform_index(58))},
                        {"sex", sex},
                        {"education", static_cast<int>(1 + r.uniform_index(7))},
                        {"exp_political", likert()},
                        {"exp_online", likert()}};
    const bool fail = r.bernoulli(config_.sim.p_attention_fail);
    j["attention_check"] = fail ? config_.experiment.attention_pre_answer % 5 + 1 : config_.experiment.attention_pre_answer;
    return j;
  }

  nlohmann::json post_answers(Agent& a) {
    auto& r = a.rng();
    auto likert = [&] { return static_cast<int>(1 + r.uniform_index(5)); };
    nlohmann::json j = {{"viewpoints_range", likert()}, {"new_arguments", likert()},
                        {"different_backgrounds", likert()}, {"opportunity", likert()},
                        {"repr_own", likert()},      {"repr_express", likert()},
                        {"repr_marginalized", likert()}};
    const bool fail = r.bernoulli(config_.sim.p_attention_fail);
    j["attention_check"] =
        fail ? config_.experiment.attention_post_answer % 5 + 1 : config_.experiment.attention_post_answer;
    return j;
  }

  // Runs inside the room lock: only schedules.
  void on_room_event(GroupId group, const chat::RoomEvent& e) {
    const Seconds now = clock_.now();
    if (e.kind == chat::EventKind::PhaseChange) {
      const auto status = e.payload.at("status").get<std::string>();
      if (status == "Waiting") {
        members_[group] = e.payload.at("members").get<std::vector<ParticipantId>>();
      } else if (status == "PreSurvey") {
        for (const auto& m : members_[group]) {
          const Seconds delay = agent(m).rng().uniform(20.0, 120.0);
          clock_.schedule_at(now + delay, [this, m] {
            if (!agent(m).gone()) runtime_->submit_survey(m, orchestrator::SurveyPhase::Pre, pre_answers(agent(m)));
          });
        }
      } else if (status == "Active") {
        for (const auto& m : members_[group]) schedule_discussion(group, m, now);
      } else if (status == "PostSurvey") {
        for (const auto& m : members_[group]) {
          const Seconds delay = agent(m).rng().uniform(20.0, 120.0);
          clock_.schedule_at(now + delay, [this, m] {
            if (!agent(m).gone()) runtime_->submit_survey(m, orchestrator::SurveyPhase::Post, post_answers(agent(m)));
          });
        }
      }
    } else if (e.kind == chat::EventKind::BotComment) {
      const auto arg = e.payload.at("argument").get<std::string>();
      for (const auto& m : members_[group]) {
        Agent& a = agent(m);
        if (a.gone() || !a.rng().bernoulli(config_.sim.p_adopt) || !a.intend(arg)) continue;
        const Seconds delay = a.rng().uniform(5.0, 40.0);
        clock_.schedule_at(now + delay, [this, group, m, arg] {
          Agent& ag = agent(m);
          if (ag.gone()) return;
          auto& r = ag.rng();
          const auto& t = adoption_templates();
          std::string text = t[r.uniform_index(t.size())];
          text::replace_all(text, "{kw}", keyword_for(arg, r));
          post(group, m, pad(std::move(text), r), {arg}, true);
          ag.expressed(arg);
        });
      }
    }
  }

  void schedule_discussion(GroupId group, const ParticipantId& m, Seconds start) {
    Agent& a = agent(m);
    auto& r = a.rng();
    const Seconds duration = config_.experiment.discussion_duration;
    const auto n = r.poisson(config_.sim.comment_rate);
    std::vector<Seconds> times;
    for (std::uint64_t i = 0; i < n; ++i) times.push_back(r.uniform(0.0, duration));
    std::sort(times.begin(), times.end());
    for (auto t : times) {
      clock_.schedule_at(start + t, [this, group, m] { speak(group, m); });
    }
    if (r.bernoulli(config_.sim.p_technical_failure)) {
      const Seconds at = start + r.uniform(0.0, duration);
      clock_.schedule_at(at, [this, m] {
        agent(m).leave();
        runtime_->disconnect(m);
      });
    }
  }

  void speak(GroupId group, const ParticipantId& m) {
    Agent& a = agent(m);
    if (a.gone()) return;
    auto& r = a.rng();
    std::optional<std::string> arg;
    if (r.bernoulli(config_.sim.p_new)) arg = a.next_argument();
    std::string text;
    std::vector<std::string> planted;
    if (arg) {
      const auto& t = argument_templates();
      text = t[r.uniform_index(t.size())];
      text::replace_all(text, "{kw}", keyword_for(*arg, r));
      planted.push_back(*arg);
    } else {
      const auto& f = filler_lines();
      text = f[r.uniform_index(f.size())];
    }
    post(group, m, pad(std::move(text), r), planted, false);
    if (arg) a.expressed(*arg);
  }

  FileConfig config_;
  const ArgumentCatalog& catalog_;
  const llm::AliasTable& aliases_;
  store::SessionStore* store_;
  std::shared_ptr<llm::Gateway> gateway_;
  runtime::VirtualClock clock_;
  std::unique_ptr<runtime::ExperimentRuntime> runtime_;
  Rng arrivals_;
  std::size_t target_rooms_ = 0;
  std::uint64_t next_agent_ = 1;
  std::map<ParticipantId, std::unique_ptr<Agent>> agents_;
  std::map<GroupId, std::vector<ParticipantId>> members_;
  std::vector<PlantedComment> truth_;
  std::size_t timers_ = 0;
};

}  // namespace

SimResult run_simulation(const FileConfig& config, const ArgumentCatalog& catalog, const llm::AliasTable& aliases,
                         store::SessionStore* store) {
  config.sim.validate();
  Simulator sim(config, catalog, aliases, store);
  return sim.run();
}

}  // namespace argbot::sim
