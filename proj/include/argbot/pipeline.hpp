#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "argbot/analytics.hpp"
#include "argbot/annotation.hpp"
#include "argbot/config.hpp"
#include "argbot/domain.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/orchestrator.hpp"
#include "argbot/simulation.hpp"
#include "argbot/store.hpp"

// Batch stages shared by the command line and the acceptance suite.
namespace argbot::pipeline {

std::string catalog_hash(const ArgumentCatalog& catalog);

// manifest.json contents: mode, config (canonical JSON), config hash, seed,
// catalog hash.
nlohmann::json make_manifest(const FileConfig& config, const ArgumentCatalog& catalog, std::string_view mode);
FileConfig manifest_config(const nlohmann::json& manifest);
// Throws InvalidArgument when the catalog differs from the one the store was
// recorded with.
void check_catalog(const nlohmann::json& manifest, const ArgumentCatalog& catalog);

struct StudyData {
  std::map<GroupId, DiscussionRoom> rooms;
  orchestrator::ParticipantRegistry participants;
};

// Replays every room log and folds the participant events.
StudyData load_study(const store::SessionStore& store);
StudyData from_simulation(const sim::SimResult& result);

// Every human comment, ordered by (group, comment id).
std::vector<annotation::SampledComment> human_comments(const std::map<GroupId, DiscussionRoom>& rooms);

std::vector<annotation::CommentAnnotation> annotate_rooms(const std::map<GroupId, DiscussionRoom>& rooms,
                                                          const ArgumentCatalog& catalog, llm::Gateway& gateway,
                                                          const llm::GatewayPolicy& policy = {});
double error_rate(const std::vector<annotation::CommentAnnotation>& annotations);

std::string annotations_jsonl(const std::vector<annotation::CommentAnnotation>& annotations);
std::vector<annotation::CommentAnnotation> parse_annotations_jsonl(std::string_view content);

std::string ground_truth_jsonl(const std::vector<sim::PlantedComment>& truth);
std::vector<sim::PlantedComment> parse_ground_truth_jsonl(std::string_view content);

// Planted arguments as labeled sets keyed like annotations.
std::vector<annotation::LabeledSet> planted_sets(const std::vector<sim::PlantedComment>& truth);

// Per-participant union of arguments, keyed (group, participant).
std::map<std::pair<GroupId, ParticipantId>, std::set<std::string>> participant_sets(
    const std::vector<annotation::LabeledSet>& comments, const std::vector<annotation::SampledComment>& senders);

struct Analysis {
  analytics::ModelSpec spec;
  analytics::RegressionFit fit;
  std::vector<analytics::ContrastResult> contrasts;  // per-condition fits only
  std::size_t dropped = 0;                           // incomplete rows
};

// Complete cases, design matrix, OLS. Per-condition fits also get every
// pairwise contrast among the condition levels present (Control included).
Analysis analyze(const std::vector<analytics::OutcomeRow>& rows, const analytics::ModelSpec& spec);

}  // namespace argbot::pipeline
