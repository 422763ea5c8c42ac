#include "argbot/orchestrator.hpp"

#include <algorithm>

#include "argbot/error.hpp"

namespace argbot::orchestrator {

WaitingEntry WaitingQueue::enqueue(const ParticipantId& participant, Seconds now) {
  if (participant.empty()) throw Error(Errc::InvalidArgument, "empty participant id");
  if (seen_.contains(participant)) throw Error(Errc::DuplicateEnqueue, participant + " was already enqueued");
  seen_.insert(participant);
  entries_.push_back({participant, now});
  return entries_.back();
}

bool WaitingQueue::remove(const ParticipantId& participant) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const WaitingEntry& e) { return e.participant == participant; });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

Formation WaitingQueue::try_form_group(Seconds now, const ExperimentConfig& config) {
  Formation out;
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const WaitingEntry& a, const WaitingEntry& b) { return a.enqueue_time < b.enqueue_time; });
  const auto target = static_cast<std::size_t>(config.target_group_size);
  const auto minimum = static_cast<std::size_t>(config.min_group_size);
  auto take = [&](std::size_t n) {
    std::vector<ParticipantId> members;
    for (std::size_t i = 0; i < n; ++i) members.push_back(entries_[i].participant);
    entries_.erase(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(n));
    out.group = std::move(members);
  };
  // Compared as now >= enqueue + cap so a timer scheduled at enqueue + cap
  // sees the entry as expired.
  const bool oldest_expired = !entries_.empty() && now >= entries_.front().enqueue_time + config.waiting_cap;
  if (entries_.size() >= target) {
    take(target);
  } else if (entries_.size() >= minimum && oldest_expired) {
    take(entries_.size());
  } else if (oldest_expired) {
    std::erase_if(entries_, [&](const WaitingEntry& e) {
      if (now < e.enqueue_time + config.waiting_cap) return false;
      out.dismissed.push_back(e.participant);
      return true;
    });
  }
  return out;
}

Condition assign_condition(Rng& rng, const std::vector<Condition>& conditions) {
  if (conditions.empty()) throw Error(Errc::InvalidConfig, "empty condition set");
  return conditions[rng.uniform_index(conditions.size())];
}

Condition assign_condition(GroupId group, std::uint64_t seed, const std::vector<Condition>& conditions) {
  auto rng = Rng::stream(seed, "condition", group);
  return assign_condition(rng, conditions);
}

Condition assign_condition_blocked(GroupId group, std::uint64_t seed, const std::vector<Condition>& conditions) {
  if (conditions.empty()) throw Error(Errc::InvalidConfig, "empty condition set");
  if (group == 0) throw Error(Errc::InvalidArgument, "group ids start at 1");
  const std::uint64_t k = conditions.size();
  auto rng = Rng::stream(seed, "condition-block", (group - 1) / k);
  std::vector<Condition> block = conditions;
  for (std::uint64_t i = k - 1; i > 0; --i) std::swap(block[i], block[rng.uniform_index(i + 1)]);
  return block[(group - 1) % k];
}

std::string_view to_string(SurveyPhase p) { return p == SurveyPhase::Pre ? "pre" : "post"; }

SurveyPhase parse_survey_phase(std::string_view s) {
  if (s == "pre") return SurveyPhase::Pre;
  if (s == "post") return SurveyPhase::Post;
  throw Error(Errc::InvalidArgument, "survey phase must be pre or post, got " + std::string(s));
}

ParticipantRecord& ParticipantRegistry::add(const ParticipantId& id) {
  auto [it, inserted] = records_.try_emplace(id);
  if (inserted) it->second.id = id;
  return it->second;
}

ParticipantRecord& ParticipantRegistry::at(const ParticipantId& id) {
  auto it = records_.find(id);
  if (it == records_.end()) throw Error(Errc::UnknownParticipant, "unknown participant " + id);
  return it->second;
}

const ParticipantRecord& ParticipantRegistry::at(const ParticipantId& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw Error(Errc::UnknownParticipant, "unknown participant " + id);
  return it->second;
}

const ParticipantRecord* ParticipantRegistry::find(const ParticipantId& id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

ParticipantRecord& ParticipantRegistry::record_attention_check(const ParticipantId& id, SurveyPhase phase,
                                                               bool passed, RoomStatus room_status) {
  auto& rec = at(id);
  const RoomStatus expected = phase == SurveyPhase::Pre ? RoomStatus::PreSurvey : RoomStatus::PostSurvey;
  if (room_status != expected) {
    throw Error(Errc::PhaseMismatch, std::string(to_string(phase)) + " attention check while the room is " +
                                         std::string(to_string(room_status)));
  }
  (phase == SurveyPhase::Pre ? rec.attention_pre : rec.attention_post) = passed;
  return rec;
}

std::vector<ParticipantRecord> ParticipantRegistry::list() const {
  std::vector<ParticipantRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  return out;
}

std::string_view to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::AttentionFail: return "attention_fail";
    case ExclusionReason::Technical: return "technical";
    case ExclusionReason::SmallGroup: return "small_group";
  }
  return "unknown";
}

ExclusionReason parse_exclusion_reason(std::string_view s) {
  if (s == "attention_fail") return ExclusionReason::AttentionFail;
  if (s == "technical") return ExclusionReason::Technical;
  if (s == "small_group") return ExclusionReason::SmallGroup;
  throw Error(Errc::ParseError, "unknown exclusion reason: " + std::string(s));
}

std::pair<Dataset, ExclusionReport> apply_exclusions(const Dataset& data, const ExperimentConfig& config) {
  Dataset kept;
  kept.room_sizes = data.room_sizes;
  ExclusionReport report;
  for (const auto& p : data.participants) {
    Exclusion ex{p.id, {}};
    if (p.attention_pre != true || p.attention_post != true) ex.reasons.push_back(ExclusionReason::AttentionFail);
    if (p.technical_failure) ex.reasons.push_back(ExclusionReason::Technical);
    std::size_t size = 0;
    if (p.group_id) {
      auto it = data.room_sizes.find(*p.group_id);
      if (it != data.room_sizes.end()) size = it->second;
    }
    if (size < static_cast<std::size_t>(config.min_group_size)) ex.reasons.push_back(ExclusionReason::SmallGroup);
    if (ex.reasons.empty()) {
      kept.participants.push_back(p);
    } else {
      report.excluded.push_back(std::move(ex));
    }
  }
  std::sort(report.excluded.begin(), report.excluded.end(),
            [](const Exclusion& a, const Exclusion& b) { return a.participant < b.participant; });
  report.retained = kept.participants.size();
  return {std::move(kept), std::move(report)};
}

}  // namespace argbot::orchestrator
