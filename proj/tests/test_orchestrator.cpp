#include <gtest/gtest.h>

#include <map>

#include "argbot/orchestrator.hpp"
#include "test_util.hpp"

using namespace argbot;
using namespace argbot::orchestrator;

TEST(Queue, FormsTargetSizeGroupsInArrivalOrder) {
  ExperimentConfig cfg;
  WaitingQueue q;
  for (int i = 6; i >= 1; --i) q.enqueue("p" + std::to_string(i), 10.0 * (7 - i));
  // p6 arrived first.
  auto f = q.try_form_group(60.0, cfg);
  ASSERT_TRUE(f.group.has_value());
  EXPECT_EQ(*f.group, (std::vector<ParticipantId>{"p6", "p5", "p4", "p3", "p2"}));
  EXPECT_EQ(q.size(), 1u);
  EXPECT_FALSE(q.try_form_group(61.0, cfg).group.has_value());
}

TEST(Queue, CapFormsSmallerGroupsAtExactBoundary) {
  ExperimentConfig cfg;
  WaitingQueue q;
  for (int i = 0; i < 4; ++i) q.enqueue("p" + std::to_string(i), 100.0 + i);
  EXPECT_FALSE(q.try_form_group(399.999, cfg).group.has_value());
  auto f = q.try_form_group(400.0, cfg);
  ASSERT_TRUE(f.group.has_value());
  EXPECT_EQ(f.group->size(), 4u);
  EXPECT_EQ(q.size(), 0u);
}

TEST(Queue, DismissesExpiredWhenTooFew) {
  ExperimentConfig cfg;
  WaitingQueue q;
  q.enqueue("a", 0.0);
  q.enqueue("b", 0.0);
  q.enqueue("c", 200.0);
  auto f = q.try_form_group(300.0, cfg);
  EXPECT_FALSE(f.group.has_value());
  EXPECT_EQ(f.dismissed, (std::vector<ParticipantId>{"a", "b"}));
  EXPECT_EQ(q.size(), 1u);
  EXPECT_ERRC(Errc::DuplicateEnqueue, q.enqueue("a", 301.0));
  EXPECT_ERRC(Errc::DuplicateEnqueue, q.enqueue("c", 301.0));
  EXPECT_ERRC(Errc::InvalidArgument, q.enqueue("", 301.0));
  EXPECT_TRUE(q.remove("c"));
  EXPECT_FALSE(q.remove("c"));
}

TEST(Assignment, UniformAcrossConditions) {
  const auto conds = condition_profile("study2");
  std::map<Condition, double> counts;
  for (GroupId g = 1; g <= 5000; ++g) counts[assign_condition(g, 77, conds)] += 1.0;
  std::vector<double> obs;
  for (auto c : conds) obs.push_back(counts[c]);
  EXPECT_LT(testutil::chi_square_uniform(obs), testutil::chi_square_critical(0.001, 4.0));
  // Keyed by group: the same group always gets the same condition.
  EXPECT_EQ(assign_condition(17, 77, conds), assign_condition(17, 77, conds));
  EXPECT_ERRC(Errc::InvalidConfig, assign_condition(1, 1, {}));
}

TEST(Assignment, BlockedIsBalancedPerBlock) {
  const auto conds = condition_profile("study2");
  std::map<Condition, int> counts;
  for (GroupId g = 1; g <= 300; ++g) counts[assign_condition_blocked(g, 3, conds)] += 1;
  for (auto c : conds) EXPECT_EQ(counts[c], 60);
  // Each block of five is a permutation.
  for (GroupId start = 1; start <= 300; start += 5) {
    std::set<Condition> block;
    for (GroupId g = start; g < start + 5; ++g) block.insert(assign_condition_blocked(g, 3, conds));
    EXPECT_EQ(block.size(), 5u);
  }
  EXPECT_ERRC(Errc::InvalidArgument, assign_condition_blocked(0, 3, conds));
}

TEST(Registry, AttentionCheckPhaseMustMatch) {
  ParticipantRegistry reg;
  reg.add("p1");
  EXPECT_ERRC(Errc::UnknownParticipant, reg.at("p2"));
  EXPECT_ERRC(Errc::PhaseMismatch, reg.record_attention_check("p1", SurveyPhase::Pre, true, RoomStatus::Active));
  reg.record_attention_check("p1", SurveyPhase::Pre, true, RoomStatus::PreSurvey);
  reg.record_attention_check("p1", SurveyPhase::Post, false, RoomStatus::PostSurvey);
  EXPECT_EQ(reg.at("p1").attention_pre, true);
  EXPECT_EQ(reg.at("p1").attention_post, false);
  EXPECT_ERRC(Errc::InvalidArgument, parse_survey_phase("mid"));
}

TEST(Exclusions, ReasonsAndCounts) {
  ExperimentConfig cfg;
  Dataset d;
  d.room_sizes = {{1, 5}, {2, 3}};
  auto rec = [](std::string id, std::optional<GroupId> g, bool pre, bool post, bool tech) {
    ParticipantRecord r;
    r.id = std::move(id);
    r.group_id = g;
    r.attention_pre = pre;
    r.attention_post = post;
    r.technical_failure = tech;
    return r;
  };
  d.participants = {rec("a", 1, true, true, false), rec("b", 1, true, false, false), rec("c", 1, true, true, true),
                    rec("d", 2, true, true, false), rec("e", std::nullopt, true, true, false),
                    rec("f", 1, false, true, true)};
  ParticipantRecord missing;
  missing.id = "g";
  missing.group_id = 1;
  missing.attention_pre = true;
  d.participants.push_back(missing);

  const auto [kept, report] = apply_exclusions(d, cfg);
  EXPECT_EQ(report.retained, 1u);
  ASSERT_EQ(kept.participants.size(), 1u);
  EXPECT_EQ(kept.participants[0].id, "a");
  const std::vector<Exclusion> want = {
      {"b", {ExclusionReason::AttentionFail}},
      {"c", {ExclusionReason::Technical}},
      {"d", {ExclusionReason::SmallGroup}},
      {"e", {ExclusionReason::SmallGroup}},
      {"f", {ExclusionReason::AttentionFail, ExclusionReason::Technical}},
      {"g", {ExclusionReason::AttentionFail}},
  };
  EXPECT_EQ(report.excluded, want);
  for (auto r : {ExclusionReason::AttentionFail, ExclusionReason::Technical, ExclusionReason::SmallGroup}) {
    EXPECT_EQ(parse_exclusion_reason(to_string(r)), r);
  }
}
