#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "argbot/simulation.hpp"
#include "argbot/text.hpp"
#include "test_util.hpp"

using namespace argbot;
using namespace argbot::sim;

namespace {

FileConfig small_config(int groups_per_condition = 4, std::uint64_t seed = 5) {
  FileConfig c;
  c.experiment.profile = "study2";
  c.experiment.conditions = condition_profile("study2");
  c.experiment.assignment = "blocked";
  c.experiment.seed = seed;
  c.sim.groups_per_condition = groups_per_condition;
  return c;
}

bool contains_keyword(const std::string& s, const ArgumentCatalog& cat, const llm::AliasTable& aliases) {
  for (const auto& a : cat.arguments()) {
    if (aliases.match(a.name, s)) return true;
  }
  return false;
}

}  // namespace

TEST(Simulation, Deterministic) {
  const auto cat = testutil::healthcare_catalog();
  const auto aliases = testutil::healthcare_aliases();
  const auto a = run_simulation(small_config(), cat, aliases);
  const auto b = run_simulation(small_config(), cat, aliases);
  EXPECT_EQ(a.rooms, b.rooms);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  EXPECT_EQ(a.participants.records(), b.participants.records());
  const auto c = run_simulation(small_config(4, 6), cat, aliases);
  EXPECT_NE(a.ground_truth, c.ground_truth);
}

TEST(Simulation, RoomCountsAndBotBehaviour) {
  const auto cat = testutil::healthcare_catalog();
  const auto r = run_simulation(small_config(), cat, testutil::healthcare_aliases());
  ASSERT_EQ(r.rooms.size(), 20u);
  std::map<Condition, int> per;
  for (const auto& [id, room] : r.rooms) {
    ++per[room.condition];
    EXPECT_EQ(room.status, RoomStatus::Closed);
    std::size_t bots = 0;
    std::set<std::string> injected;
    for (const auto& c : room.comments) {
      if (!c.bot_generated) continue;
      ++bots;
      injected.insert(c.text);
    }
    if (room.condition == Condition::Control) {
      EXPECT_EQ(bots, 0u);
    } else {
      EXPECT_LE(bots, 3u);
      EXPECT_EQ(injected.size(), bots);  // never the same argument twice
    }
  }
  for (auto c : condition_profile("study2")) EXPECT_EQ(per[c], 4);
}

TEST(Simulation, InjectedArgumentsWereMissing) {
  // The mock detector sees every planted keyword, so an injected argument can
  // never have been planted by a human earlier in the same room.
  const auto cat = testutil::healthcare_catalog();
  const auto r = run_simulation(small_config(), cat, testutil::healthcare_aliases());
  std::map<std::pair<GroupId, std::uint64_t>, const PlantedComment*> truth;
  for (const auto& t : r.ground_truth) truth[{t.group_id, t.comment_id}] = &t;
  for (const auto& [id, room] : r.rooms) {
    std::set<std::string> seen;
    for (const auto& c : room.comments) {
      if (c.bot_generated) {
        for (const auto& a : cat.arguments()) {
          if (c.text == "Have you considered " + a.name + "? " + a.explanation) {
            EXPECT_FALSE(seen.contains(a.name));
          }
        }
        continue;
      }
      for (const auto& a : truth.at({id, c.id})->arguments) seen.insert(a);
    }
  }
}

TEST(Simulation, GroundTruthCoversHumanComments) {
  const auto cat = testutil::healthcare_catalog();
  const auto r = run_simulation(small_config(), cat, testutil::healthcare_aliases());
  std::size_t human = 0;
  for (const auto& [id, room] : r.rooms) {
    for (const auto& c : room.comments) human += !c.bot_generated;
  }
  EXPECT_EQ(r.ground_truth.size(), human);
  for (const auto& t : r.ground_truth) {
    EXPECT_LE(t.arguments.size(), 1u);
    for (const auto& a : t.arguments) EXPECT_TRUE(cat.contains(a));
    EXPECT_EQ(planted_from_json(to_json(t)), t);
  }
}

TEST(Simulation, NoAdoptionWithoutProbability) {
  auto cfg = small_config();
  cfg.sim.p_adopt = 0.0;
  const auto r = run_simulation(cfg, testutil::healthcare_catalog(), testutil::healthcare_aliases());
  for (const auto& t : r.ground_truth) EXPECT_FALSE(t.adoption);
}

TEST(Simulation, CommentRateMatchesPoissonMean) {
  auto cfg = small_config(12, 21);
  cfg.sim.p_adopt = 0.0;
  cfg.sim.p_technical_failure = 0.0;
  const auto r = run_simulation(cfg, testutil::healthcare_catalog(), testutil::healthcare_aliases());
  double comments = 0.0, members = 0.0;
  for (const auto& [id, room] : r.rooms) {
    members += static_cast<double>(room.members.size());
    for (const auto& c : room.comments) comments += !c.bot_generated;
  }
  // Poisson(10) per member: the standard error of the mean is sqrt(10 / n).
  const double mean = comments / members;
  EXPECT_NEAR(mean, cfg.sim.comment_rate, 4.0 * std::sqrt(cfg.sim.comment_rate / members));
}

TEST(Simulation, TextBlocksCarryNoKeyword) {
  const auto cat = testutil::healthcare_catalog();
  const auto aliases = testutil::healthcare_aliases();
  for (const auto& t : argument_templates()) {
    EXPECT_NE(t.find("{kw}"), std::string::npos);
    std::string blank = t;
    text::replace_all(blank, "{kw}", "");
    EXPECT_FALSE(contains_keyword(blank, cat, aliases)) << t;
  }
  for (const auto& t : adoption_templates()) {
    std::string blank = t;
    text::replace_all(blank, "{kw}", "");
    EXPECT_FALSE(contains_keyword(blank, cat, aliases)) << t;
  }
  for (const auto& f : filler_lines()) EXPECT_FALSE(contains_keyword(f, cat, aliases)) << f;
  std::string all_padding;
  for (const auto& w : padding_words()) all_padding += w + " ";
  EXPECT_FALSE(contains_keyword(all_padding, cat, aliases));
}

TEST(Simulation, PlantedKeywordsAreRecoverable) {
  // Each planted comment mentions exactly its own argument under the alias
  // matching rule, so the mock annotator reproduces the ground truth.
  const auto cat = testutil::healthcare_catalog();
  const auto aliases = testutil::healthcare_aliases();
  const auto r = run_simulation(small_config(), cat, aliases);
  std::map<std::pair<GroupId, std::uint64_t>, std::string> texts;
  for (const auto& [id, room] : r.rooms) {
    for (const auto& c : room.comments) texts[{id, c.id}] = c.text;
  }
  for (const auto& t : r.ground_truth) {
    const auto& s = texts.at({t.group_id, t.comment_id});
    std::vector<std::string> hits;
    for (const auto& a : cat.arguments()) {
      if (aliases.match(a.name, s)) hits.push_back(a.name);
    }
    EXPECT_EQ(hits, t.arguments) << s;
  }
}

TEST(Simulation, ParticipantsGetSurveysAndGroups) {
  const auto r = run_simulation(small_config(), testutil::healthcare_catalog(), testutil::healthcare_aliases());
  std::size_t placed = 0, with_pre = 0;
  for (const auto& [id, rec] : r.participants.records()) {
    placed += rec.group_id.has_value();
    with_pre += rec.pre.has_value();
  }
  std::size_t members = 0;
  for (const auto& [id, room] : r.rooms) members += room.members.size();
  EXPECT_EQ(placed, members);
  EXPECT_EQ(with_pre, members);
}
