#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "argbot/domain.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/rng.hpp"

namespace argbot::annotation {

struct CommentAnnotation {
  GroupId group_id = 0;
  std::uint64_t comment_id = 0;
  ParticipantId sender;
  std::vector<std::string> arguments;  // catalog spellings, catalog order
  std::string raw;
  bool sentinel_hit = false;
  bool error = false;
  std::size_t unknown_names = 0;

  bool operator==(const CommentAnnotation&) const = default;
};

nlohmann::json to_json(const CommentAnnotation& a);
CommentAnnotation annotation_from_json(const nlohmann::json& j);

std::vector<Comment> strip_bot_comments(const std::vector<Comment>& transcript);

// List of arguments for the system prompt: one "name: explanation" per line.
std::string format_loa(const ArgumentCatalog& catalog);

struct ParsedReply {
  std::vector<std::string> arguments;
  bool sentinel_hit = false;
  std::size_t unknown_names = 0;
};

// Accepts the reply optionally wrapped in a code fence. Throws ParseError when
// it is not a JSON object with an "arguments" array of {"name", ...} records.
ParsedReply parse_annotation_reply(std::string_view reply, const ArgumentCatalog& catalog);

inline constexpr std::string_view kJsonReminder = "\nYou must output a valid JSON.";

// Holds the rendered system prompt for one catalog.
class Annotator {
 public:
  Annotator(const ArgumentCatalog& catalog, llm::Gateway& gateway, llm::GatewayPolicy policy = {});

  const std::string& system_prompt() const { return system_prompt_; }
  // One re-ask with a JSON reminder on a gateway or parse failure; after
  // that the annotation is flagged as an error with no arguments.
  CommentAnnotation annotate(const Comment& comment, GroupId group) const;

 private:
  const ArgumentCatalog* catalog_;
  llm::Gateway* gateway_;
  llm::GatewayPolicy policy_;
  std::string system_prompt_;
};

CommentAnnotation annotate_comment(const Comment& comment, const ArgumentCatalog& catalog, llm::Gateway& gateway,
                                   GroupId group = 0);

struct ParticipantArgumentProfile {
  ParticipantId participant;
  std::size_t unique_argument_count = 0;
  std::set<std::string> arguments;
};

// Union over the annotations whose sender is `participant`.
ParticipantArgumentProfile unique_arguments(const ParticipantId& participant,
                                            const std::vector<CommentAnnotation>& annotations);
std::size_t group_unique_arguments(const std::vector<CommentAnnotation>& annotations);

struct SampledComment {
  GroupId group_id = 0;
  std::uint64_t comment_id = 0;
  ParticipantId sender;
  std::string text;

  bool operator==(const SampledComment&) const = default;
};

// n distinct comments uniformly without replacement, in pool order. Throws
// SampleTooLarge when n exceeds the pool.
std::vector<SampledComment> draw_validation_sample(const std::vector<SampledComment>& pool, std::size_t n, Rng& rng);

// Review file: header "comment<TAB>machine_annotation", one row per sample.
std::string validation_review_tsv(const std::vector<SampledComment>& sample,
                                  const std::vector<CommentAnnotation>& annotations);
// Companion id file: group_id, comment_id, sender.
std::string validation_ids_tsv(const std::vector<SampledComment>& sample);

struct LabeledSet {
  GroupId group_id = 0;
  std::uint64_t comment_id = 0;
  std::set<std::string> arguments;  // compared case-insensitively
};

// Share of comments whose two sets are equal. Throws IdMismatch unless both
// lists cover the same (group, comment) keys.
double agreement_rate(const std::vector<LabeledSet>& machine, const std::vector<LabeledSet>& human);
// Mean per-comment Jaccard index (two empty sets count as 1).
double jaccard_agreement(const std::vector<LabeledSet>& machine, const std::vector<LabeledSet>& human);

std::vector<LabeledSet> to_labeled(const std::vector<CommentAnnotation>& annotations);

}  // namespace argbot::annotation
