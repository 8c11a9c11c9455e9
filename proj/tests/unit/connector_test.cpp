#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "behavbench/connector.hpp"
#include "support/fixtures.hpp"

using namespace behavbench;
namespace bt = behavbench::testing;
using behavbench::testing::MockChatServer;
using behavbench::testing::temp_dir;

namespace {

EndpointConfig endpoint(const std::string& url) {
  EndpointConfig ep;
  ep.base_url = url;
  ep.model_name = "mock-model";
  ep.per_request_timeout_s = 5;
  return ep;
}

CollectOptions options(std::size_t n_valid, int in_flight = 4) {
  CollectOptions opt;
  opt.agent_id = "mock";
  opt.n_valid = n_valid;
  opt.max_in_flight = in_flight;
  opt.retry_backoff_ms = 0;
  return opt;
}

std::size_t count_valid(const std::vector<CollectionRecord>& records) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                [](const CollectionRecord& r) { return r.valid(); }));
}

} // namespace

TEST(RenderPrompt, Substitution) {
  const auto dictator = make_game(GameId::Dictator);
  EXPECT_EQ(render_prompt("split ${endowment}", dictator), "split $100");
  EXPECT_NE(render_prompt("There are {boxes} boxes.", make_game(GameId::BombRisk)).find("100"),
            std::string::npos);
  EXPECT_EQ(render_prompt("{{literal}} {game}", dictator), "{literal} dictator");
  EXPECT_EQ(render_prompt("{endowment} x{multiplier} mpcr {mpcr}", make_game(GameId::PublicGoods)),
            "20 x2 mpcr 0.5");
  EXPECT_EQ(render_prompt("{receipts} from {investment} x{multiplier}", make_game(GameId::TrustBanker)),
            "150 from 50 x3");
  EXPECT_EQ(render_prompt("{pd_temptation}/{pd_sucker} {min_action}-{max_action}",
                          make_game(GameId::PrisonersDilemma)),
            "300/0 Cooperate-Defect");
  EXPECT_THROW(render_prompt("{bogus}", dictator), ValidationError);
  EXPECT_THROW(render_prompt("{endowment", dictator), ValidationError);
  EXPECT_THROW(render_prompt("oops}", dictator), ValidationError);
}

TEST(PromptHash, IdentifiesTheRenderedPrompt) {
  EXPECT_EQ(prompt_hash("abc"), prompt_hash("abc"));
  EXPECT_NE(prompt_hash("abc"), prompt_hash("abd"));
  EXPECT_EQ(prompt_hash("").size(), 16u);
}

TEST(Endpoint, UrlAndWireFormat) {
  const auto u = parse_base_url("https://api.example.com:8443/v1/");
  EXPECT_EQ(u.scheme_host_port, "https://api.example.com:8443");
  EXPECT_EQ(u.path_prefix, "/v1");
  EXPECT_EQ(parse_base_url("http://localhost:9").path_prefix, "");
  EXPECT_THROW(parse_base_url("localhost:9"), ConfigError);
  EXPECT_THROW(parse_base_url("ftp://x"), ConfigError);

  auto ep = endpoint("http://x");
  auto body = chat_request_body(ep, "hi");
  EXPECT_EQ(body.at("model"), "mock-model");
  EXPECT_EQ(body.at("messages").size(), 1u);
  EXPECT_EQ(body.at("messages")[0].at("content"), "hi");
  EXPECT_FALSE(body.contains("temperature"));
  ep.temperature = 0.7;
  EXPECT_EQ(chat_request_body(ep, "hi").at("temperature"), 0.7);

  EXPECT_EQ(chat_response_text(R"({"choices":[{"message":{"content":"$5"}}]})"), "$5");
  EXPECT_EQ(chat_response_text(R"({"choices":[{"message":{"content":null}}]})"), "");
  EXPECT_THROW(chat_response_text("{}"), NetworkError);
  EXPECT_THROW(chat_response_text("<html>"), NetworkError);
}

TEST(Endpoint, MissingKeyNamesTheVariable) {
  auto ep = endpoint("http://127.0.0.1:1/v1");
  ep.api_key_env = "BEHAVBENCH_TEST_UNSET_KEY";
  ::unsetenv(ep.api_key_env.c_str());
  try {
    HttpChatClient client(ep);
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("BEHAVBENCH_TEST_UNSET_KEY"), std::string::npos);
  }
}

TEST(Collect, PointMassFromConstantEndpoint) {
  MockChatServer server([](int) { return std::string("50"); });
  HttpChatClient client(endpoint(server.base_url()));
  const auto dictator = make_game(GameId::Dictator);
  const auto records = collect(client, dictator, "prompt", options(50));
  ASSERT_EQ(records.size(), 50u);
  EXPECT_EQ(count_valid(records), 50u);
  EXPECT_EQ(from_records(dictator, records), ActionDistribution::point_mass(dictator, 50, 50));
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].attempt_index, i);
    EXPECT_EQ(records[i].prompt_hash, prompt_hash("prompt"));
    EXPECT_EQ(records[i].agent_id, "mock");
  }
  const auto sent = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(sent.at("messages")[0].at("content"), "prompt");
}

TEST(Collect, InvalidRepliesAreKeptAndRetried) {
  MockChatServer server([](int n) { return n % 2 == 0 ? std::string("hmm, let me think") : "$30"; });
  HttpChatClient client(endpoint(server.base_url()));
  const auto records = collect(client, make_game(GameId::Dictator), "p", options(10, 1));
  EXPECT_EQ(records.size(), 20u);
  EXPECT_EQ(count_valid(records), 10u);
  for (const auto& r : records) {
    if (r.valid()) {
      EXPECT_EQ(*r.parsed, 30);
    } else {
      EXPECT_EQ(r.raw_reply, "hmm, let me think");
    }
  }
}

TEST(Collect, ConcurrentRequestsStayBounded) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  MockChatServer server([&](int) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    return std::string("$7");
  });
  HttpChatClient client(endpoint(server.base_url()));
  const auto records = collect(client, make_game(GameId::Dictator), "p", options(24, 3));
  EXPECT_EQ(count_valid(records), 24u);
  EXPECT_LE(peak.load(), 3);
  std::vector<std::uint64_t> idx;
  for (const auto& r : records) idx.push_back(r.attempt_index);
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
}

TEST(Collect, ParserStarvation) {
  MockChatServer server([](int) { return std::string("I refuse."); });
  HttpChatClient client(endpoint(server.base_url()));
  auto opt = options(5, 1);
  opt.retry_limit = 3;
  try {
    collect(client, make_game(GameId::Dictator), "p", opt);
    FAIL();
  } catch (const CollectionError& e) {
    EXPECT_EQ(e.kind(), CollectionError::Kind::ParserStarvation);
    EXPECT_EQ(e.records().size(), 3u);
    EXPECT_EQ(count_valid(e.records()), 0u);
    EXPECT_NE(std::string(e.what()).find("mock/dictator"), std::string::npos);
  }
}

TEST(Collect, PartialResultsSurviveALaterFailure) {
  MockChatServer server([](int n) { return n < 4 ? std::string("$12") : "nope"; });
  HttpChatClient client(endpoint(server.base_url()));
  auto opt = options(10, 1);
  opt.retry_limit = 2;
  try {
    collect(client, make_game(GameId::Dictator), "p", opt);
    FAIL();
  } catch (const CollectionError& e) {
    EXPECT_EQ(count_valid(e.records()), 4u);
    EXPECT_EQ(e.records().size(), 6u);
  }
}

TEST(Collect, UnreachableEndpointIsANetworkError) {
  auto ep = endpoint("http://127.0.0.1:" + std::to_string(bt::closed_port()) + "/v1");
  ep.per_request_timeout_s = 1;
  HttpChatClient client(ep);
  auto opt = options(3, 1);
  opt.retry_limit = 2;
  std::vector<CollectionRecord> sunk;
  try {
    collect(client, make_game(GameId::Dictator), "p", opt, [&](const CollectionRecord& r) { sunk.push_back(r); });
    FAIL();
  } catch (const CollectionError& e) {
    EXPECT_EQ(e.kind(), CollectionError::Kind::Network);
    EXPECT_EQ(count_valid(e.records()), 0u);
    EXPECT_NE(std::string(e.what()).find("failed after 2 attempts"), std::string::npos);
  }
  EXPECT_TRUE(sunk.empty());
}

TEST(Collect, RejectedCredentialsStopImmediately) {
  MockChatServer server([](int) { return std::string("$1"); });
  server.require_auth("Bearer right-key");
  ::setenv("BEHAVBENCH_TEST_KEY", "wrong-key", 1);
  auto ep = endpoint(server.base_url());
  ep.api_key_env = "BEHAVBENCH_TEST_KEY";
  HttpChatClient client(ep);
  try {
    collect(client, make_game(GameId::Dictator), "p", options(5, 1));
    FAIL();
  } catch (const CollectionError& e) {
    EXPECT_EQ(e.kind(), CollectionError::Kind::Auth);
  }
  EXPECT_EQ(server.requests(), 1);

  ::setenv("BEHAVBENCH_TEST_KEY", "right-key", 1);
  HttpChatClient good(ep);
  EXPECT_EQ(count_valid(collect(good, make_game(GameId::Dictator), "p", options(2, 1))), 2u);
  ::unsetenv("BEHAVBENCH_TEST_KEY");
}

TEST(Collect, ScriptedClientIsDeterministic) {
  const auto bomb = make_game(GameId::BombRisk);
  auto run = [&] {
    ScriptedChatClient client(Agent({"u", AgentKind::UniformRandom, {}, std::nullopt, {}, 5}), bomb,
                              std::nullopt);
    std::vector<Action> out;
    for (const auto& r : collect(client, bomb, "p", options(30, 1))) out.push_back(*r.parsed);
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Transcripts, WriterAppendsAndRepairsTruncation) {
  const auto path = temp_dir("jsonl") / "agent" / "dictator.jsonl";
  CollectionRecord r{"a", GameId::Dictator, 0, "My decision is $5.", 5, "t", "h"};
  {
    JsonlWriter w(path);
    w.write(r);
    r.attempt_index = 1;
    r.parsed.reset();
    r.raw_reply = "line\nbreak \"quoted\"";
    w.write(r);
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"agent_id":"a","game_id":"dict)";
  }
  auto records = read_records(path);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[1], r);
  {
    JsonlWriter w(path);
    r.attempt_index = 2;
    w.write(r);
  }
  records = read_records(path);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[2].attempt_index, 2u);
}

TEST(Transcripts, CorruptionInTheMiddleIsAnError) {
  const auto path = temp_dir("corrupt") / "x.jsonl";
  write_text_file(path, "{broken\n" + record_to_json(CollectionRecord{}).dump() + "\n");
  EXPECT_THROW(read_records(path), ValidationError);
  write_text_file(path, R"({"agent_id":"a"})" "\n");
  EXPECT_THROW(read_records(path), ValidationError);
}
