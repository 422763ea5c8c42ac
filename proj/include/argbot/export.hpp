#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "argbot/analytics.hpp"
#include "argbot/annotation.hpp"
#include "argbot/config.hpp"
#include "argbot/domain.hpp"
#include "argbot/orchestrator.hpp"

namespace argbot::exporting {

inline constexpr std::string_view kCsvHeader =
    "participant_id,group_id,condition,unique_arguments,share_comments,share_tokens,representativeness,"
    "viewpoints_range,new_arguments,different_backgrounds,opportunity,group_size,age,male,education,"
    "exp_political,exp_online";

struct ParticipantTable {
  std::vector<analytics::OutcomeRow> rows;  // by (group id, participant id)
  orchestrator::ExclusionReport exclusions;
};

// Applies the exclusion rules and derives one outcome row per retained
// participant. Shares are computed over every member of the room, before
// exclusion; a room without any human comment leaves them missing. Throws
// MissingAnnotation when a retained participant's comment has no annotation.
ParticipantTable build_participant_table(const std::map<GroupId, DiscussionRoom>& rooms,
                                         const orchestrator::ParticipantRegistry& participants,
                                         const std::vector<annotation::CommentAnnotation>& annotations,
                                         const ExperimentConfig& config);

std::string to_csv(const std::vector<analytics::OutcomeRow>& rows);
// Throws ParseError on a header mismatch or malformed cell.
std::vector<analytics::OutcomeRow> parse_csv(std::string_view csv);

// participant_id<TAB>reasons (comma-separated), header first.
std::string exclusions_tsv(const orchestrator::ExclusionReport& report);

}  // namespace argbot::exporting
