#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "argbot/domain.hpp"
#include "test_util.hpp"

using namespace argbot;

TEST(Catalog, LoadsShippedCatalog) {
  const auto cat = testutil::healthcare_catalog();
  EXPECT_EQ(cat.size(), 24u);
  EXPECT_EQ(cat.topic(), "Should AI be used in healthcare?");
  ASSERT_NE(cat.find("  DATA privacy "), nullptr);
  EXPECT_EQ(cat.find("data privacy")->name, "data privacy");
  EXPECT_FALSE(cat.contains("weather"));
  EXPECT_EQ(cat.names().front(), "identification of rare symptoms");
}

TEST(Catalog, Invariants) {
  EXPECT_ERRC(Errc::InvalidCatalog, validate_catalog({{"a", "x"}}));
  EXPECT_ERRC(Errc::InvalidCatalog, validate_catalog({{"a", "x"}, {"A ", "y"}}));
  EXPECT_ERRC(Errc::InvalidCatalog, validate_catalog({{"a", "x"}, {"b", " "}}));
  EXPECT_ERRC(Errc::InvalidCatalog, validate_catalog({{"a, b", "x"}, {"c", "y"}}));
  EXPECT_ERRC(Errc::InvalidCatalog, validate_catalog({{"", "x"}, {"c", "y"}}));
  EXPECT_ERRC(Errc::InvalidCatalog, parse_catalog("name without tab\nother\tok\n"));
  EXPECT_ERRC(Errc::Io, load_catalog("/nonexistent/catalog.tsv"));
  const auto c = parse_catalog("# topic: T\r\n a \t x \r\n\n#comment\nb\ty\n");
  EXPECT_EQ(c.topic(), "T");
  EXPECT_EQ(c.arguments()[0], (Argument{"a", "x"}));
}

TEST(Conditions, ProfilesAndNames) {
  EXPECT_EQ(condition_profile("study1"),
            (std::vector<Condition>{Condition::Control, Condition::Participant, Condition::Moderator}));
  EXPECT_EQ(condition_profile("study2").size(), 5u);
  EXPECT_ERRC(Errc::InvalidConfig, condition_profile("study3"));
  for (auto c : condition_profile("study2")) EXPECT_EQ(parse_condition(to_string(c)), c);
  EXPECT_ERRC(Errc::InvalidArgument, parse_condition("Robot"));
}

TEST(Conditions, BotLabelsAndHighlighting) {
  EXPECT_FALSE(bot_identity(Condition::Control).has_value());
  EXPECT_EQ(*bot_identity(Condition::Participant), (BotIdentity{"Alex", false}));
  EXPECT_EQ(*bot_identity(Condition::Moderator), (BotIdentity{"Alex (Moderator)", true}));
  EXPECT_EQ(*bot_identity(Condition::AIParticipant), (BotIdentity{"Alex (AI Participant)", false}));
  EXPECT_EQ(*bot_identity(Condition::AIModerator), (BotIdentity{"Alex (AI Moderator)", true}));
}

TEST(Rooms, DisplayNames) {
  DiscussionRoom r;
  r.condition = Condition::Moderator;
  r.members = {"p1", "p2"};
  r.pseudonyms = {{"p1", "Baldwin"}};
  EXPECT_EQ(r.display_name("p1"), "Baldwin");
  EXPECT_EQ(r.display_name("p2"), "p2");
  EXPECT_EQ(r.display_name(kBotSender), "Alex (Moderator)");
  EXPECT_TRUE(r.is_member("p2"));
  EXPECT_FALSE(r.is_member("p3"));
  for (auto s : {RoomStatus::Waiting, RoomStatus::PreSurvey, RoomStatus::Active, RoomStatus::PostSurvey,
                 RoomStatus::Closed}) {
    EXPECT_EQ(parse_room_status(to_string(s)), s);
  }
}

TEST(Surveys, ParseAndValidate) {
  nlohmann::json pre = {{"knowledge", 4}, {"stance", 2},    {"ai_attitude", 5},   {"ideology", 3},
                        {"age", 34},      {"sex", "Female"}, {"education", 6}, {"exp_political", 2},
                        {"exp_online", 1}};
  const auto p = parse_pre_survey(pre);
  EXPECT_EQ(p.age, 34);
  EXPECT_EQ(p.sex, Sex::Female);
  EXPECT_EQ(parse_pre_survey(to_json(p)), p);

  auto bad = pre;
  bad["knowledge"] = 6;
  EXPECT_ERRC(Errc::InvalidArgument, parse_pre_survey(bad));
  bad = pre;
  bad["knowledge"] = 0;
  EXPECT_ERRC(Errc::InvalidArgument, parse_pre_survey(bad));
  bad = pre;
  bad["stance"] = "3";
  EXPECT_ERRC(Errc::InvalidArgument, parse_pre_survey(bad));
  bad = pre;
  bad.erase("education");
  EXPECT_ERRC(Errc::InvalidArgument, parse_pre_survey(bad));
  bad = pre;
  bad["sex"] = "x";
  EXPECT_ERRC(Errc::InvalidArgument, parse_pre_survey(bad));

  nlohmann::json post = {{"viewpoints_range", 5}, {"new_arguments", 4}, {"different_backgrounds", 3},
                         {"opportunity", 2},      {"repr_own", 1},      {"repr_express", 3},
                         {"repr_marginalized", 5}};
  const auto q = parse_post_survey(post);
  EXPECT_EQ(q.repr_marginalized, 5);
  EXPECT_EQ(parse_post_survey(to_json(q)), q);
  post["opportunity"] = 2.5;
  EXPECT_ERRC(Errc::InvalidArgument, parse_post_survey(post));
}
