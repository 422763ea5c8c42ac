#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "argbot/domain.hpp"

namespace argbot {

struct ExperimentConfig {
  std::string profile = "study1";
  std::vector<Condition> conditions = condition_profile("study1");
  int target_group_size = 5;
  int min_group_size = 4;
  Seconds waiting_cap = 300.0;
  Seconds discussion_duration = 600.0;
  std::vector<Seconds> injection_times{120.0, 300.0, 480.0};
  std::uint64_t seed = 1;
  // Pre- and post-survey deadline after the phase opens.
  Seconds survey_timeout = 900.0;
  // A member disconnected this long during the discussion is flagged with a
  // technical failure.
  Seconds reconnect_grace = 60.0;
  // Expected answers to the embedded attention-check items.
  int attention_pre_answer = 2;
  int attention_post_answer = 4;
  // "simple": each group draws a condition with equal probabilities.
  // "blocked": permuted blocks of one group per condition, so every arm gets
  // the same count when the number of groups is a multiple of the block.
  std::string assignment = "simple";

  // Throws Error(InvalidConfig).
  void validate() const;
};

// Agent model for the simulator.
struct SimParams {
  int groups_per_condition = 60;
  double comment_rate = 10.0;  // expected comments per discussion
  double p_new = 0.4;
  double p_adopt = 0.6;
  double verbosity = 12.0;  // mean tokens per comment
  int pool_size = 0;        // 0: the whole catalog
  double arrival_mean = 55.0;
  double p_attention_fail = 0.03;
  double p_technical_failure = 0.01;
  double p_sex_other = 0.0;

  void validate() const;
};

struct FileConfig {
  ExperimentConfig experiment;
  SimParams sim;

  // Canonical JSON of every setting; its hash goes into manifests.
  nlohmann::json to_json() const;
  std::string hash() const;
};

// Inverse of FileConfig::to_json (used to recover the config from a manifest).
FileConfig config_from_json(const nlohmann::json& j);

// key = value lines, `#` comments. Unknown keys are an error.
FileConfig parse_config(std::string_view content);
FileConfig load_config(const std::filesystem::path& path);

}  // namespace argbot
