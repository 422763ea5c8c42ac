#include <gtest/gtest.h>

#include "argbot/export.hpp"
#include "test_util.hpp"

using namespace argbot;
using namespace argbot::exporting;
using annotation::CommentAnnotation;

namespace {

struct Fixture {
  std::map<GroupId, DiscussionRoom> rooms;
  orchestrator::ParticipantRegistry reg;
  std::vector<CommentAnnotation> anns;
};

// Two rooms of five. In room 1, p1 writes two comments and p2 one; the bot
// writes one. Room 2 is silent. p7 fails the post attention check.
Fixture two_rooms() {
  Fixture f;
  for (GroupId g : {1, 2}) {
    DiscussionRoom r;
    r.group_id = g;
    r.condition = g == 1 ? Condition::Moderator : Condition::Control;
    for (int i = 1; i <= 5; ++i) r.members.push_back("p" + std::to_string((g - 1) * 5 + i));
    r.status = RoomStatus::Closed;
    f.rooms[g] = r;
  }
  auto& c = f.rooms[1].comments;
  c.push_back({1, "p1", "one two three", 5.0, false});
  c.push_back({2, "BOT", "Have you considered x? y", 120.0, true});
  c.push_back({3, "p1", "four", 130.0, false});
  c.push_back({4, "p2", "five six", 200.0, false});
  f.anns = {{1, 1, "p1", {"a", "b"}, "", false, false, 0},
            {1, 3, "p1", {"b", "c"}, "", false, false, 0},
            {1, 4, "p2", {}, "", true, false, 0}};
  for (int i = 1; i <= 10; ++i) {
    auto& rec = f.reg.add("p" + std::to_string(i));
    rec.group_id = i <= 5 ? 1 : 2;
    PreSurvey pre;
    pre.age = 20 + i;
    pre.sex = i % 3 == 0 ? Sex::Other : (i % 2 ? Sex::Male : Sex::Female);
    pre.education = 3;
    pre.exp_political = 2;
    pre.exp_online = 4;
    rec.pre = pre;
    PostSurvey post;
    post.repr_own = 2;
    post.repr_express = 3;
    post.repr_marginalized = 5;
    post.opportunity = i % 5 + 1;
    rec.post = post;
    rec.attention_pre = true;
    rec.attention_post = i != 7;
  }
  return f;
}

const analytics::OutcomeRow& row(const ParticipantTable& t, const std::string& id) {
  for (const auto& r : t.rows) {
    if (r.participant_id == id) return r;
  }
  throw std::runtime_error("no row for " + id);
}

}  // namespace

TEST(Export, BuildsRowsAfterExclusion) {
  auto f = two_rooms();
  const auto t = build_participant_table(f.rooms, f.reg, f.anns, ExperimentConfig{});
  ASSERT_EQ(t.rows.size(), 9u);
  EXPECT_EQ(t.exclusions.retained, 9u);
  ASSERT_EQ(t.exclusions.excluded.size(), 1u);
  EXPECT_EQ(t.exclusions.excluded[0].participant, "p7");
  EXPECT_EQ(exclusions_tsv(t.exclusions), "participant_id\treasons\np7\tattention_fail\n");

  const auto& p1 = t.rows[0];
  EXPECT_EQ(p1.participant_id, "p1");
  EXPECT_EQ(p1.condition, Condition::Moderator);
  EXPECT_EQ(*p1.unique_arguments, 3.0);
  // Room 1 comment counts (2,1,0,0,0), mean 0.6; tokens (4,2,0,0,0), mean 1.2.
  EXPECT_DOUBLE_EQ(*p1.share_comments, 2.0 / 0.6);
  EXPECT_DOUBLE_EQ(*p1.share_tokens, 4.0 / 1.2);
  EXPECT_DOUBLE_EQ(*t.rows[1].share_comments, 1.0 / 0.6);
  EXPECT_EQ(*t.rows[2].share_comments, 0.0);
  EXPECT_EQ(*t.rows[1].unique_arguments, 0.0);
  EXPECT_DOUBLE_EQ(*p1.representativeness, 10.0 / 3.0);
  EXPECT_EQ(p1.controls.group_size, 5.0);
  EXPECT_EQ(p1.controls.male, 1.0);
  EXPECT_EQ(t.rows[1].controls.male, 0.0);
  EXPECT_FALSE(t.rows[2].controls.male.has_value());  // p3 answered Other

  // Silent room: shares undefined, unique count zero.
  const auto& p6 = row(t, "p6");
  EXPECT_EQ(p6.group_id, 2u);
  EXPECT_FALSE(p6.share_comments.has_value());
  EXPECT_FALSE(p6.share_tokens.has_value());
  EXPECT_EQ(*p6.unique_arguments, 0.0);
}

TEST(Export, SharesAverageToOneOverTheWholeRoom) {
  auto f = two_rooms();
  // The exclusion of p7 must not change the denominator of room 2's shares.
  f.rooms[2].comments = {{1, "p7", "x y", 1.0, false}, {2, "p8", "z", 2.0, false}};
  f.anns.push_back({2, 1, "p7", {}, "", true, false, 0});
  f.anns.push_back({2, 2, "p8", {}, "", true, false, 0});
  const auto t = build_participant_table(f.rooms, f.reg, f.anns, ExperimentConfig{});
  EXPECT_DOUBLE_EQ(*row(t, "p8").share_comments, 1.0 / 0.4);
  double sum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) sum += *t.rows[i].share_comments;
  EXPECT_NEAR(sum / 5.0, 1.0, 1e-12);
}

TEST(Export, MissingAnnotationIsAnError) {
  auto f = two_rooms();
  f.anns.pop_back();
  EXPECT_ERRC(Errc::MissingAnnotation, build_participant_table(f.rooms, f.reg, f.anns, ExperimentConfig{}));
}

TEST(Export, CsvRoundTripIsExact) {
  auto f = two_rooms();
  const auto t = build_participant_table(f.rooms, f.reg, f.anns, ExperimentConfig{});
  const auto csv = to_csv(t.rows);
  EXPECT_EQ(csv.substr(0, kCsvHeader.size()), kCsvHeader);
  EXPECT_EQ(parse_csv(csv), t.rows);
  EXPECT_EQ(to_csv(parse_csv(csv)), csv);
  // Same inputs give the same bytes.
  EXPECT_EQ(to_csv(build_participant_table(f.rooms, f.reg, f.anns, ExperimentConfig{}).rows), csv);
}

TEST(Export, CsvRejectsMalformedInput) {
  EXPECT_ERRC(Errc::ParseError, parse_csv("bad,header\n"));
  const std::string h = std::string(kCsvHeader) + "\n";
  EXPECT_ERRC(Errc::ParseError, parse_csv(h + "p1,1,Control\n"));
  EXPECT_ERRC(Errc::ParseError, parse_csv(h + "p1,1,Robot,,,,,,,,,,,,,,\n"));
  EXPECT_ERRC(Errc::ParseError, parse_csv(h + "p1,1,Control,abc,,,,,,,,,,,,,\n"));
  const auto rows = parse_csv(h + "\"p,1\",1,Control,,,,,,,,,,,,,,\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].participant_id, "p,1");
  EXPECT_EQ(parse_csv(to_csv(rows)), rows);
}
