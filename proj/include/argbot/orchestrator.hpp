#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "argbot/config.hpp"
#include "argbot/domain.hpp"
#include "argbot/rng.hpp"

namespace argbot::orchestrator {

struct WaitingEntry {
  ParticipantId participant;
  Seconds enqueue_time = 0.0;

  bool operator==(const WaitingEntry&) const = default;
};

struct Formation {
  std::optional<std::vector<ParticipantId>> group;
  // Waited past the cap with too few others around.
  std::vector<ParticipantId> dismissed;
};

class WaitingQueue {
 public:
  // Throws DuplicateEnqueue if the participant is queued, placed or was
  // dismissed before.
  WaitingEntry enqueue(const ParticipantId& participant, Seconds now);
  // Leaves the queue without being placed (e.g. closed the tab). No-op for
  // unknown ids.
  bool remove(const ParticipantId& participant);

  // Five longest-waiting when at least the target size is queued; otherwise
  // everyone once at least the minimum is queued and the oldest entry has
  // reached the waiting cap. When fewer than the minimum are queued, entries
  // past the cap are dismissed.
  Formation try_form_group(Seconds now, const ExperimentConfig& config);

  std::size_t size() const { return entries_.size(); }
  const std::vector<WaitingEntry>& entries() const { return entries_; }
  bool seen(const ParticipantId& participant) const { return seen_.contains(participant); }

 private:
  std::vector<WaitingEntry> entries_;  // enqueue order
  std::set<ParticipantId> seen_;
};

// Uniform over `conditions`.
Condition assign_condition(Rng& rng, const std::vector<Condition>& conditions);
// One draw from the stream keyed by (seed, group id), so a group's condition
// does not depend on how many groups formed before it.
Condition assign_condition(GroupId group, std::uint64_t seed, const std::vector<Condition>& conditions);
// Permuted-block variant: groups 1..k form the first block, k+1..2k the
// next, and each block is a seeded shuffle of the condition set.
Condition assign_condition_blocked(GroupId group, std::uint64_t seed, const std::vector<Condition>& conditions);

enum class SurveyPhase { Pre, Post };
std::string_view to_string(SurveyPhase p);
SurveyPhase parse_survey_phase(std::string_view s);

// Participant records keyed by id.
class ParticipantRegistry {
 public:
  ParticipantRecord& add(const ParticipantId& id);
  // Throws UnknownParticipant.
  ParticipantRecord& at(const ParticipantId& id);
  const ParticipantRecord& at(const ParticipantId& id) const;
  const ParticipantRecord* find(const ParticipantId& id) const;
  bool contains(const ParticipantId& id) const { return records_.contains(id); }

  // Phase must match the room status (PreSurvey / PostSurvey).
  ParticipantRecord& record_attention_check(const ParticipantId& id, SurveyPhase phase, bool passed,
                                            RoomStatus room_status);

  const std::map<ParticipantId, ParticipantRecord>& records() const { return records_; }
  std::vector<ParticipantRecord> list() const;

 private:
  std::map<ParticipantId, ParticipantRecord> records_;
};

enum class ExclusionReason { AttentionFail, Technical, SmallGroup };
std::string_view to_string(ExclusionReason r);
ExclusionReason parse_exclusion_reason(std::string_view s);

struct Exclusion {
  ParticipantId participant;
  std::vector<ExclusionReason> reasons;

  bool operator==(const Exclusion&) const = default;
};

struct ExclusionReport {
  std::vector<Exclusion> excluded;  // by participant id
  std::size_t retained = 0;

  bool operator==(const ExclusionReport&) const = default;
};

struct Dataset {
  std::vector<ParticipantRecord> participants;
  // Room size at formation, by group.
  std::map<GroupId, std::size_t> room_sizes;
};

// Removes anyone with a failed or missing attention check, a technical
// failure, or a room below the minimum size (or no room at all).
std::pair<Dataset, ExclusionReport> apply_exclusions(const Dataset& data, const ExperimentConfig& config);

}  // namespace argbot::orchestrator
