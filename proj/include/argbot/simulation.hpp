#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "argbot/config.hpp"
#include "argbot/domain.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/orchestrator.hpp"

namespace argbot::store {
class SessionStore;
}

namespace argbot::sim {

// Arguments planted in one simulated comment.
struct PlantedComment {
  GroupId group_id = 0;
  std::uint64_t comment_id = 0;
  ParticipantId sender;
  std::vector<std::string> arguments;
  bool adoption = false;

  bool operator==(const PlantedComment&) const = default;
};

nlohmann::json to_json(const PlantedComment& p);
PlantedComment planted_from_json(const nlohmann::json& j);

struct SimResult {
  std::map<GroupId, DiscussionRoom> rooms;
  orchestrator::ParticipantRegistry participants;
  std::vector<PlantedComment> ground_truth;
  Seconds end_time = 0.0;
  std::size_t timers_fired = 0;
};

// Text building blocks for scripted agents. None of them may contain an
// argument keyword; a unit test checks this against the alias table.
const std::vector<std::string>& argument_templates();  // contain "{kw}"
const std::vector<std::string>& adoption_templates();  // contain "{kw}"
const std::vector<std::string>& filler_lines();
const std::vector<std::string>& padding_words();

// Runs the full pipeline (waiting room through post-survey) under a virtual
// clock with scripted agents and the mock gateway built from `aliases`.
// Writes every event to `store` when given. Deterministic in the config seed.
SimResult run_simulation(const FileConfig& config, const ArgumentCatalog& catalog, const llm::AliasTable& aliases,
                         store::SessionStore* store = nullptr);

}  // namespace argbot::sim
