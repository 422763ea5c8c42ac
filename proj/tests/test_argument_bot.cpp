#include <gtest/gtest.h>

#include <map>

#include "argbot/argument_bot.hpp"
#include "argbot/prompt_templates.hpp"
#include "argbot/store.hpp"
#include "test_util.hpp"

using namespace argbot;
using namespace argbot::bot;

namespace {

ArgumentCatalog catalog3() { return load_catalog(testutil::fixture("catalog_3.tsv")); }

DiscussionRoom fixture_room() {
  DiscussionRoom r;
  r.group_id = 7;
  r.condition = Condition::Moderator;
  r.members = {"p1", "p2", "p3"};
  r.pseudonyms = {{"p1", "Baldwin"}, {"p2", "Comer"}, {"p3", "Terry"}};
  r.discussion_start = 1000.0;
  r.status = RoomStatus::Active;
  r.comments = {
      {1, "p1", "I think AI could help doctors a lot", 10.0, false},
      {2, "p2", "but what happens to my records?", 40.0, false},
      {3, std::string(kBotSender),
       "Have you considered faster diagnosis? AI can analyse test results quickly, leading to earlier treatment.",
       120.0, true},
      {4, "p3", "fair, though a machine\nwill never hold your hand", 130.0, false},
  };
  return r;
}

// Fails every call.
class DownBackend : public llm::Backend {
 public:
  std::string name() const override { return "down"; }
  std::string send(const llm::CompletionRequest&, llm::Millis) override {
    ++calls;
    throw Error(Errc::GatewayTransport, "down");
  }
  int calls = 0;
};

class FixedBackend : public llm::Backend {
 public:
  explicit FixedBackend(std::string reply) : reply_(std::move(reply)) {}
  std::string name() const override { return "fixed"; }
  std::string send(const llm::CompletionRequest&, llm::Millis) override { return reply_; }

 private:
  std::string reply_;
};

}  // namespace

TEST(DetectionPrompt, MatchesGoldenBytes) {
  const auto golden = store::read_file(testutil::fixture("detection_prompt_golden.txt"));
  const auto log = store::read_file(testutil::fixture("detection_log.txt"));
  EXPECT_EQ(build_detection_prompt(log, catalog3(), 0, 2), golden);
}

TEST(DetectionPrompt, RoomLogFoldsNewlinesAndUsesLabels) {
  const auto room = fixture_room();
  EXPECT_EQ(preprocess_log(room), store::read_file(testutil::fixture("detection_log.txt")));
  const auto cat = catalog3();
  ArgumentBot bot(cat, room.group_id, 1);
  // 130 s elapsed is minute 2.
  EXPECT_EQ(bot.prompt_for(room, 130.0), store::read_file(testutil::fixture("detection_prompt_golden.txt")));
}

TEST(DetectionPrompt, RoundTripsThroughParser) {
  const auto cat = catalog3();
  const auto prompt = build_detection_prompt("a: b", cat, 3, 9);
  const auto parts = prompts::parse_detection(prompt);
  ASSERT_TRUE(parts.has_value());
  EXPECT_EQ(parts->start_time, "3");
  EXPECT_EQ(parts->end_time, "9");
  EXPECT_EQ(parts->log, "a: b");
  EXPECT_EQ(prompts::split_argument_list(parts->arguments_list), cat.names());
}

TEST(Coverage, ParsesTagsInCatalogOrder) {
  const auto cat = catalog3();
  const auto r = parse_coverage(
      "<arguments_mentioned> Data Privacy, faster diagnosis </arguments_mentioned>\n"
      "<ARGUMENTS_NOT>lack of empathy: Machines cannot..., data privacy, nonsense</ARGUMENTS_NOT>\n"
      "Have you considered lack of empathy?",
      cat);
  EXPECT_EQ(r.mentioned, (std::vector<std::string>{"faster diagnosis", "data privacy"}));
  EXPECT_EQ(r.not_mentioned, (std::vector<std::string>{"lack of empathy"}));
  EXPECT_EQ(r.unknown_names, 1u);
}

TEST(Coverage, NoneAndMissingBlocks) {
  const auto cat = catalog3();
  const auto r = parse_coverage("<arguments_mentioned>None</arguments_mentioned><arguments_not>data privacy</arguments_not>", cat);
  EXPECT_TRUE(r.mentioned.empty());
  EXPECT_EQ(r.not_mentioned, (std::vector<std::string>{"data privacy"}));
  EXPECT_ERRC(Errc::ParseError, parse_coverage("<arguments_mentioned>x</arguments_mentioned>", cat));
  EXPECT_ERRC(Errc::ParseError, parse_coverage("<arguments_not>unterminated", cat));
}

TEST(Selection, UniformOverCandidates) {
  const std::vector<std::string> cands = {"a", "b", "c", "d", "e"};
  auto rng = Rng::stream(2024, "selection-test");
  std::map<std::string, double> counts;
  for (int i = 0; i < 10000; ++i) counts[*select_missing(cands, rng)] += 1.0;
  std::vector<double> obs;
  for (const auto& c : cands) obs.push_back(counts[c]);
  EXPECT_LT(testutil::chi_square_uniform(obs), testutil::chi_square_critical(0.001, 4.0));
  EXPECT_FALSE(select_missing({}, rng).has_value());
}

TEST(Schedule, SlotsFireOnce) {
  InjectionSchedule s;
  EXPECT_EQ(s.times, (std::vector<Seconds>{120.0, 300.0, 480.0}));
  s.mark_fired(1);
  EXPECT_ERRC(Errc::IllegalTransition, s.mark_fired(1));
  EXPECT_ERRC(Errc::InvalidArgument, s.mark_fired(3));
}

TEST(Bot, PicksOnlyUnmentionedAndRemembers) {
  const auto cat = testutil::healthcare_catalog();
  ArgumentBot bot(cat, 3, 99);
  CoverageResult cov;
  cov.mentioned = {cat.names()[0], cat.names()[1]};
  cov.not_mentioned = {cat.names()[2], cat.names()[3]};
  auto first = bot.resolve(0, cov);
  ASSERT_TRUE(first.argument.has_value());
  EXPECT_TRUE(first.argument->name == cat.names()[2] || first.argument->name == cat.names()[3]);
  EXPECT_EQ(first.message, "Have you considered " + first.argument->name + "? " + first.argument->explanation);
  EXPECT_FALSE(first.fallback);

  // The reply keeps listing the injected argument as missing; it must not be
  // chosen again.
  auto second = bot.resolve(1, cov);
  ASSERT_TRUE(second.argument.has_value());
  EXPECT_NE(second.argument->name, first.argument->name);
  auto third = bot.resolve(2, cov);
  EXPECT_FALSE(third.argument.has_value());
  EXPECT_EQ(bot.memory().size(), 4u);
}

TEST(Bot, FallbackExcludesMemory) {
  const auto cat = catalog3();
  auto down = std::make_shared<DownBackend>();
  llm::Gateway gw(down, [](llm::Millis) {});
  llm::GatewayPolicy policy;
  policy.retries = 0;
  auto room = fixture_room();
  ArgumentBot bot(cat, room.group_id, 5);
  std::set<std::string> picked;
  for (std::size_t slot = 0; slot < 3; ++slot) {
    auto out = bot.run_injection(slot, room, 120.0 + slot, gw, policy);
    EXPECT_TRUE(out.fallback);
    EXPECT_FALSE(out.coverage.has_value());
    ASSERT_TRUE(out.argument.has_value());
    picked.insert(out.argument->name);
  }
  EXPECT_EQ(picked.size(), 3u);
  // Detection is tried twice per slot.
  EXPECT_EQ(down->calls, 6);
}

TEST(Bot, UsesMockCoverage) {
  const auto cat = catalog3();
  llm::AliasTable aliases;
  aliases.add("data privacy", {"records"});
  llm::Gateway gw(std::make_shared<llm::MockBackend>(aliases));
  auto room = fixture_room();
  ArgumentBot bot(cat, room.group_id, 5);
  auto out = bot.run_injection(0, room, 130.0, gw, {});
  ASSERT_TRUE(out.coverage.has_value());
  ASSERT_TRUE(out.argument.has_value());
  EXPECT_EQ(out.argument->name, "lack of empathy");
}

TEST(Bot, MalformedReplyFallsBack) {
  const auto cat = catalog3();
  llm::Gateway gw(std::make_shared<FixedBackend>("I am not following the format"));
  auto room = fixture_room();
  ArgumentBot bot(cat, room.group_id, 5);
  auto out = bot.run_injection(0, room, 130.0, gw, {});
  EXPECT_TRUE(out.fallback);
  EXPECT_TRUE(out.argument.has_value());
}

TEST(Bot, ControlRoomRejected) {
  const auto cat = catalog3();
  llm::Gateway gw(std::make_shared<llm::EchoBackend>());
  auto room = fixture_room();
  room.condition = Condition::Control;
  ArgumentBot bot(cat, room.group_id, 5);
  EXPECT_ERRC(Errc::ControlRoom, bot.run_injection(0, room, 130.0, gw, {}));
}

TEST(Bot, SelectionIsSeeded) {
  const auto cat = testutil::healthcare_catalog();
  auto run = [&](std::uint64_t seed) {
    ArgumentBot bot(cat, 11, seed);
    std::vector<std::string> names;
    for (std::size_t s = 0; s < 3; ++s) names.push_back(bot.resolve(s, std::nullopt).argument->name);
    return names;
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
}
