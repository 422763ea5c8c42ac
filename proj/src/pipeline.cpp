#include "argbot/pipeline.hpp"

#include <algorithm>

#include "argbot/chat.hpp"
#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot::pipeline {

std::string catalog_hash(const ArgumentCatalog& catalog) {
  std::string flat = catalog.topic() + "\n";
  for (const auto& a : catalog.arguments()) flat += a.name + "\t" + a.explanation + "\n";
  return text::hex64(text::fnv1a(flat));
}

nlohmann::json make_manifest(const FileConfig& config, const ArgumentCatalog& catalog, std::string_view mode) {
  return {{"mode", mode},
          {"config", config.to_json()},
          {"config_hash", config.hash()},
          {"seed", config.experiment.seed},
          {"catalog_hash", catalog_hash(catalog)},
          {"arguments", catalog.size()}};
}

FileConfig manifest_config(const nlohmann::json& manifest) {
  if (!manifest.contains("config")) throw Error(Errc::ParseError, "manifest has no config");
  return config_from_json(manifest.at("config"));
}

void check_catalog(const nlohmann::json& manifest, const ArgumentCatalog& catalog) {
  const auto recorded = manifest.value("catalog_hash", std::string());
  if (recorded != catalog_hash(catalog)) {
    throw Error(Errc::InvalidArgument, "catalog does not match the one recorded in the store (hash " + recorded + ")");
  }
}

StudyData load_study(const store::SessionStore& store) {
  StudyData out;
  for (const auto& [id, events] : store.load_room_logs()) out.rooms.emplace(id, chat::replay(events));
  out.participants = store.load_participants();
  return out;
}

StudyData from_simulation(const sim::SimResult& result) { return {result.rooms, result.participants}; }

std::vector<annotation::SampledComment> human_comments(const std::map<GroupId, DiscussionRoom>& rooms) {
  std::vector<annotation::SampledComment> out;
  for (const auto& [id, room] : rooms) {
    for (const auto& c : room.comments) {
      if (!c.bot_generated) out.push_back({id, c.id, c.sender, c.text});
    }
  }
  return out;
}

std::vector<annotation::CommentAnnotation> annotate_rooms(const std::map<GroupId, DiscussionRoom>& rooms,
                                                          const ArgumentCatalog& catalog, llm::Gateway& gateway,
                                                          const llm::GatewayPolicy& policy) {
  annotation::Annotator annotator(catalog, gateway, policy);
  std::vector<annotation::CommentAnnotation> out;
  for (const auto& [id, room] : rooms) {
    for (const auto& c : annotation::strip_bot_comments(room.comments)) out.push_back(annotator.annotate(c, id));
  }
  return out;
}

double error_rate(const std::vector<annotation::CommentAnnotation>& annotations) {
  if (annotations.empty()) return 0.0;
  const auto n = std::count_if(annotations.begin(), annotations.end(), [](const auto& a) { return a.error; });
  return static_cast<double>(n) / static_cast<double>(annotations.size());
}

std::string annotations_jsonl(const std::vector<annotation::CommentAnnotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) out += annotation::to_json(a).dump() + "\n";
  return out;
}

std::vector<annotation::CommentAnnotation> parse_annotations_jsonl(std::string_view content) {
  std::vector<annotation::CommentAnnotation> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::ParseError, "annotations line " + std::to_string(line_no) + ": bad JSON");
    out.push_back(annotation::annotation_from_json(j));
  }
  return out;
}

std::string ground_truth_jsonl(const std::vector<sim::PlantedComment>& truth) {
  std::string out;
  for (const auto& p : truth) out += sim::to_json(p).dump() + "\n";
  return out;
}

std::vector<sim::PlantedComment> parse_ground_truth_jsonl(std::string_view content) {
  std::vector<sim::PlantedComment> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::ParseError, "ground truth line " + std::to_string(line_no) + ": bad JSON");
    out.push_back(sim::planted_from_json(j));
  }
  return out;
}

std::vector<annotation::LabeledSet> planted_sets(const std::vector<sim::PlantedComment>& truth) {
  std::vector<annotation::LabeledSet> out;
  for (const auto& p : truth) out.push_back({p.group_id, p.comment_id, {p.arguments.begin(), p.arguments.end()}});
  return out;
}

std::map<std::pair<GroupId, ParticipantId>, std::set<std::string>> participant_sets(
    const std::vector<annotation::LabeledSet>& comments, const std::vector<annotation::SampledComment>& senders) {
  std::map<std::pair<GroupId, std::uint64_t>, const ParticipantId*> who;
  for (const auto& s : senders) who[{s.group_id, s.comment_id}] = &s.sender;
  std::map<std::pair<GroupId, ParticipantId>, std::set<std::string>> out;
  for (const auto& c : comments) {
    auto it = who.find({c.group_id, c.comment_id});
    if (it == who.end()) {
      throw Error(Errc::IdMismatch,
                  "comment " + std::to_string(c.comment_id) + " in room " + std::to_string(c.group_id) + " unknown");
    }
    auto& set = out[{c.group_id, *it->second}];
    for (const auto& a : c.arguments) set.insert(text::to_lower(a));
  }
  return out;
}

Analysis analyze(const std::vector<analytics::OutcomeRow>& rows, const analytics::ModelSpec& spec) {
  Analysis out;
  out.spec = spec;
  auto [kept, dropped] = analytics::complete_cases(rows, spec.outcome);
  out.dropped = dropped;
  out.fit = analytics::ols_fit(analytics::build_design_matrix(kept, spec));
  if (spec.kind == analytics::ModelKind::PerCondition) {
    std::vector<Condition> levels = spec.levels;
    if (levels.empty()) {
      for (const auto& r : kept) levels.push_back(r.condition);
    } else {
      levels.push_back(spec.reference);
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() >= 2) {
      out.contrasts = analytics::pairwise_contrasts(out.fit, analytics::all_condition_pairs(levels),
                                                    analytics::coefficient_name(spec.reference));
    }
  }
  return out;
}

}  // namespace argbot::pipeline
