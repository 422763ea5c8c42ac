#include <gtest/gtest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <boost/asio.hpp>
#include <nlohmann/json.hpp>

#include <deque>
#include <thread>

#include "argbot/argument_bot.hpp"
#include "argbot/llm_gateway.hpp"
#include "argbot/prompt_templates.hpp"
#include "argbot/store.hpp"
#include "test_util.hpp"

using namespace argbot;
using namespace argbot::llm;
using namespace std::chrono_literals;

namespace {

// Replays a fixed sequence of outcomes: an Errc to throw or a reply.
class ScriptedBackend : public Backend {
 public:
  struct Step {
    std::optional<Errc> error;
    std::string reply;
  };
  explicit ScriptedBackend(std::deque<Step> steps) : steps_(std::move(steps)) {}
  std::string name() const override { return "scripted"; }
  std::string send(const CompletionRequest&, Millis) override {
    if (steps_.empty()) throw Error(Errc::GatewayTransport, "script exhausted");
    auto s = steps_.front();
    steps_.pop_front();
    if (s.error) throw Error(*s.error, "scripted");
    return s.reply;
  }

 private:
  std::deque<Step> steps_;
};

CompletionRequest req(std::string user = "hello") {
  CompletionRequest r;
  r.user_prompt = std::move(user);
  return r;
}

}  // namespace

TEST(Gateway, RequestAndPolicyValidation) {
  Gateway g(std::make_shared<EchoBackend>());
  EXPECT_ERRC(Errc::InvalidArgument, g.complete(req(""), {}));
  auto r = req();
  r.temperature = -1;
  EXPECT_ERRC(Errc::InvalidArgument, g.complete(r, {}));
  GatewayPolicy p;
  p.retries = -1;
  EXPECT_ERRC(Errc::InvalidArgument, g.complete(req(), p));
  EXPECT_ERRC(Errc::InvalidArgument, Gateway(nullptr));
}

TEST(Gateway, RetriesTransientErrorsWithBackoff) {
  std::vector<Millis> sleeps;
  auto backend = std::make_shared<ScriptedBackend>(
      std::deque<ScriptedBackend::Step>{{Errc::GatewayTimeout, ""}, {Errc::GatewayTransport, ""}, {std::nullopt, "ok"}});
  Gateway g(backend, [&](Millis m) { sleeps.push_back(m); });
  GatewayPolicy p;
  p.retries = 2;
  p.backoff = 100ms;
  EXPECT_EQ(g.complete(req(), p), "ok");
  EXPECT_EQ(g.attempts(), 3u);
  EXPECT_EQ(sleeps, (std::vector<Millis>{100ms, 200ms}));
}

TEST(Gateway, GivesUpAfterRetryBudget) {
  auto backend = std::make_shared<ScriptedBackend>(
      std::deque<ScriptedBackend::Step>{{Errc::GatewayTimeout, ""}, {Errc::GatewayTimeout, ""}, {std::nullopt, "late"}});
  Gateway g(backend, [](Millis) {});
  GatewayPolicy p;
  p.retries = 1;
  EXPECT_ERRC(Errc::GatewayTimeout, g.complete(req(), p));
  EXPECT_EQ(g.attempts(), 2u);
}

TEST(Gateway, AuthAndMalformedAreNotRetried) {
  for (auto code : {Errc::GatewayAuth, Errc::GatewayMalformed}) {
    auto backend =
        std::make_shared<ScriptedBackend>(std::deque<ScriptedBackend::Step>{{code, ""}, {std::nullopt, "never"}});
    Gateway g(backend, [](Millis) {});
    EXPECT_ERRC(code, g.complete(req(), {}));
    EXPECT_EQ(g.attempts(), 1u);
  }
}

TEST(Gateway, TokenBucketLimitsRate) {
  Gateway g(std::make_shared<EchoBackend>());
  GatewayPolicy p;
  p.rate_per_second = 20.0;
  p.burst = 1;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) g.complete(req(), p);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  // Five waits of 50 ms after the first token.
  EXPECT_GE(elapsed, 240ms);
}

TEST(Aliases, ParseKeywordsMatch) {
  const auto t = AliasTable::parse("# c\nData Privacy\tprivacy|personal data\nbias\t\n");
  EXPECT_EQ(t.keywords("data privacy"), (std::vector<std::string>{"data privacy", "privacy", "personal data"}));
  EXPECT_EQ(t.keywords("unknown"), (std::vector<std::string>{"unknown"}));
  EXPECT_EQ(t.match("data privacy", "my PERSONAL DATA is mine"), std::optional<std::string>("personal data"));
  EXPECT_FALSE(t.match("data privacy", "nothing here").has_value());
  EXPECT_ERRC(Errc::ParseError, AliasTable::parse("no tab here\n"));
  EXPECT_ERRC(Errc::Io, AliasTable::load("/nonexistent/a.tsv"));
  EXPECT_EQ(testutil::healthcare_aliases().size(), 24u);
}

TEST(Aliases, EveryCatalogArgumentHasAliases) {
  const auto cat = testutil::healthcare_catalog();
  const auto aliases = testutil::healthcare_aliases();
  for (const auto& a : cat.arguments()) EXPECT_GT(aliases.keywords(a.name).size(), 1u) << a.name;
}

TEST(Aliases, NoKeywordTriggersAnotherArgument) {
  // A keyword for one argument must not contain a keyword of another, or the
  // mock would report both.
  const auto cat = testutil::healthcare_catalog();
  const auto aliases = testutil::healthcare_aliases();
  for (const auto& a : cat.arguments()) {
    for (const auto& kw : aliases.keywords(a.name)) {
      for (const auto& b : cat.arguments()) {
        if (a.name == b.name) continue;
        EXPECT_FALSE(aliases.match(b.name, kw).has_value()) << kw << " also matches " << b.name;
      }
    }
  }
}

TEST(MockBackend, CoverageFollowsTheLog) {
  const auto cat = load_catalog(testutil::fixture("catalog_3.tsv"));
  const auto log = store::read_file(testutil::fixture("detection_log.txt"));
  const auto prompt = bot::build_detection_prompt(log, cat, 0, 2);
  AliasTable aliases;
  aliases.add("data privacy", {"records"});
  const auto reply = mock_coverage_response(prompt, aliases);
  EXPECT_EQ(reply,
            "<arguments_mentioned>faster diagnosis, data privacy</arguments_mentioned>\n"
            "<arguments_not>lack of empathy</arguments_not>");
  EXPECT_ERRC(Errc::ParseError, mock_coverage_response("not a prompt", aliases));
}

TEST(MockBackend, DispatchesOnPromptShape) {
  const auto cat = load_catalog(testutil::fixture("catalog_3.tsv"));
  MockBackend mock(AliasTable::parse("lack of empathy\tcompassion\n"));
  CompletionRequest r;
  r.system_prompt = prompts::render_annotation_system("faster diagnosis: a\ndata privacy: b\nlack of empathy: c");
  r.user_prompt = prompts::render_annotation_user("no compassion from a machine");
  const auto j = nlohmann::json::parse(mock.send(r, 1000ms));
  ASSERT_EQ(j["arguments"].size(), 1u);
  EXPECT_EQ(j["arguments"][0]["name"], "lack of empathy");

  r.user_prompt = prompts::render_annotation_user("hello there");
  const auto none = nlohmann::json::parse(mock.send(r, 1000ms));
  EXPECT_EQ(none["arguments"][0]["name"], std::string(kNoArgumentSentinel));

  CompletionRequest other;
  other.user_prompt = "anything";
  const auto a = mock.send(other, 1000ms);
  EXPECT_EQ(a.rfind("mock-", 0), 0u);
  EXPECT_EQ(a, mock.send(other, 1000ms));
  EchoBackend echo;
  other.system_prompt = "s";
  EXPECT_EQ(echo.send(other, 1000ms), std::string("s\x1f") + "anything");
}

class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& rq, httplib::Response& rs) {
      last_auth_ = rq.get_header_value("Authorization");
      last_body_ = rq.body;
      if (mode_ == "ok") {
        rs.set_content(R"({"choices":[{"message":{"role":"assistant","content":"pong"}}]})", "application/json");
      } else if (mode_ == "401") {
        rs.status = 401;
      } else if (mode_ == "429") {
        rs.status = 429;
      } else if (mode_ == "503") {
        rs.status = 503;
      } else if (mode_ == "418") {
        rs.status = 418;
      } else if (mode_ == "garbage") {
        rs.set_content("not json", "text/plain");
      } else if (mode_ == "nochoices") {
        rs.set_content(R"({"choices":[]})", "application/json");
      } else if (mode_ == "slow") {
        std::this_thread::sleep_for(1500ms);
        rs.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  HttpBackend backend() {
    return HttpBackend({"http://127.0.0.1:" + std::to_string(port_) + "/v1/", "secret", "test-model"});
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string mode_ = "ok";
  std::string last_auth_;
  std::string last_body_;
};

TEST_F(HttpBackendTest, SendsChatCompletion) {
  auto b = backend();
  CompletionRequest r;
  r.system_prompt = "sys";
  r.user_prompt = "ping";
  EXPECT_EQ(b.send(r, 2000ms), "pong");
  EXPECT_EQ(last_auth_, "Bearer secret");
  const auto body = nlohmann::json::parse(last_body_);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "ping");
  EXPECT_EQ(body["temperature"], 0.0);
}

TEST_F(HttpBackendTest, MapsFailures) {
  auto b = backend();
  const std::pair<const char*, Errc> cases[] = {
      {"401", Errc::GatewayAuth},          {"429", Errc::GatewayTransport},   {"503", Errc::GatewayTransport},
      {"418", Errc::GatewayMalformed},     {"garbage", Errc::GatewayMalformed}, {"nochoices", Errc::GatewayMalformed},
  };
  for (const auto& [mode, code] : cases) {
    SCOPED_TRACE(mode);
    mode_ = mode;
    EXPECT_ERRC(code, b.send(req(), 2000ms));
  }
  mode_ = "slow";
  EXPECT_ERRC(Errc::GatewayTimeout, b.send(req(), 300ms));
}

TEST(HttpBackend, ConnectionRefusedIsTransport) {
  // A bound socket that never listens refuses connections.
  boost::asio::io_context ioc;
  boost::asio::ip::tcp::socket holder(ioc);
  holder.open(boost::asio::ip::tcp::v4());
  holder.bind({boost::asio::ip::make_address("127.0.0.1"), 0});
  const auto port = holder.local_endpoint().port();
  HttpBackend b({"http://127.0.0.1:" + std::to_string(port), "", "m"});
  EXPECT_ERRC(Errc::GatewayTransport, b.send(req(), 1000ms));
  EXPECT_ERRC(Errc::InvalidConfig, HttpBackend({"no-scheme", "", ""}));
}
