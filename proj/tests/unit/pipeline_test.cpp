#include <sstream>

#include <gtest/gtest.h>

#include "behavbench/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace behavbench;
namespace bt = behavbench::testing;
using behavbench::testing::MockChatServer;
using behavbench::testing::temp_dir;

namespace fs = std::filesystem;

namespace {

nlohmann::json scripted_config(const fs::path& session) {
  return {
      {"session_dir", session.string()},
      {"baseline", (bt::data_dir() / "synthetic_baseline.json").string()},
      {"seed", 7},
      {"n_valid", 20},
      {"agents",
       {
           {{"id", "fair"}, {"kind", "best_response"}, {"b", 0.5}, {"r", 0.5}},
           {{"id", "noisy"}, {"kind", "uniform_random"}},
           {{"id", "split"}, {"kind", "point_mass"}, {"fixed_action", 50},
            {"fixed_actions", {{"trust_banker", 100}, {"public_goods", 10}, {"prisoners_dilemma", "cooperate"}}}},
       }},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

std::string first_cell(const std::string& csv, const std::string& prefix) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  return {};
}

} // namespace

TEST(RunConfig, ParsesAndValidates) {
  const auto c = run_config_from_json(scripted_config("/tmp/s"));
  ASSERT_EQ(c.agents.size(), 3u);
  EXPECT_EQ(c.agents[0].profile.utility, (UtilityParams{0.5, 0.5}));
  EXPECT_EQ(c.agents[1].profile.seed, derive_seed(7, "noisy"));
  EXPECT_EQ(c.agents[2].profile.fixed_actions.at(GameId::PrisonersDilemma), pd::kCooperate);
  EXPECT_EQ(c.games.size(), 8u);
  EXPECT_NO_THROW(validate_run_config(c));

  auto j = scripted_config("/tmp/s");
  j["colour"] = "blue";
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j = scripted_config("/tmp/s");
  j["agents"][0]["id"] = "human";
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j = scripted_config("/tmp/s");
  j["agents"][0]["kind"] = "telepath";
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j = scripted_config("/tmp/s");
  j["agents"][1]["id"] = "fair";
  EXPECT_THROW(validate_run_config(run_config_from_json(j)), ConfigError);
  j = scripted_config("/tmp/s");
  j["games"] = {"dictator", "chess"};
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j = scripted_config("/tmp/s");
  j["agents"].push_back({{"id", "remote"}, {"kind", "remote"}, {"model", "m"}});
  EXPECT_THROW(run_config_from_json(j), ConfigError);
}

TEST(RunConfig, RelativePathsResolveAgainstTheConfigFile) {
  const auto dir = temp_dir("cfg");
  write_text_file(dir / "run.json", R"({"session_dir": "out", "baseline": "../b.json", "agents": []})");
  const auto c = load_run_config(dir / "run.json");
  EXPECT_EQ(c.session_dir, dir / "out");
  EXPECT_EQ(c.baseline, dir / "../b.json");
}

TEST(RunConfig, HashIgnoresSessionDirAndSecrets) {
  auto a = run_config_from_json(scripted_config("/tmp/a"));
  auto b = run_config_from_json(scripted_config("/tmp/b"));
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 8;
  EXPECT_NE(config_hash(a), config_hash(b));
  auto j = scripted_config("/tmp/a");
  j["agents"].push_back({{"id", "r"}, {"kind", "remote"}, {"base_url", "http://x/v1"}, {"model", "m"},
                         {"api_key_env", "SOME_KEY"}});
  ::setenv("SOME_KEY", "sk-secret-value", 1);
  EXPECT_EQ(run_config_to_json(run_config_from_json(j)).dump().find("sk-secret"), std::string::npos);
  ::unsetenv("SOME_KEY");
}

TEST(Pipeline, ScriptedSessionEndToEnd) {
  const auto session = temp_dir("e2e");
  const auto c = run_config_from_json(scripted_config(session));
  std::ostringstream log;
  const auto summary = cmd_collect(c, log);
  EXPECT_TRUE(summary.complete()) << log.str();
  EXPECT_EQ(summary.pairs.size(), 24u);
  for (const char* agent : {"fair", "noisy", "split"})
    for (GameId g : kAllGames) EXPECT_TRUE(fs::exists(transcript_path(c, agent, g)));

  const auto dists = load_session(session);
  EXPECT_EQ(dists.at("split").at(GameId::Dictator),
            ActionDistribution::point_mass(make_game(GameId::Dictator), 50, 20));
  EXPECT_EQ(dists.at("fair").at(GameId::BombRisk),
            ActionDistribution::point_mass(make_game(GameId::BombRisk), 50, 20));

  const auto result = cmd_analyze(c, log);
  EXPECT_TRUE(result.warnings.empty());
  for (const char* f : {"turing.csv", "wasserstein.csv", "logit_fits.csv", "preference_curves_r1.csv",
                        "preference_curves_r0.5.csv", "inconsistency_r1.csv", "inconsistency_r0.5.csv",
                        "report.json", "histograms/human/dictator.csv", "histograms/fair/bomb_risk.svg"})
    EXPECT_TRUE(fs::exists(result.out_dir / f)) << f;

  const std::string hash = config_hash(c);
  for (const auto& e : fs::recursive_directory_iterator(result.out_dir)) {
    if (!e.is_regular_file()) continue;
    const auto text = slurp(e.path());
    EXPECT_NE(text.find(hash), std::string::npos) << e.path();
    if (e.path().extension() != ".json") {
      EXPECT_NE(text.find("seed=7"), std::string::npos) << e.path();
    }
  }

  const auto turing = slurp(result.out_dir / "turing.csv");
  EXPECT_EQ(turing.rfind("# config_hash=" + config_hash(c) + " seed=7\n", 0), 0u);
  for (GameId g : kAllGames)
    EXPECT_EQ(first_cell(turing, "human," + std::string(to_string(g)) + ","), "0.5");
  EXPECT_EQ(first_cell(turing, "human,overall,"), "0.5");

  // An equal split is the best response of b = 0.5 under either exponent.
  const auto fits = slurp(result.out_dir / "logit_fits.csv");
  for (const char* r : {"1", "0.5"}) {
    const auto row = first_cell(fits, std::string("fair,dictator,") + r + ",");
    ASSERT_FALSE(row.empty());
    EXPECT_NEAR(std::stod(row.substr(0, row.find(','))), 0.5, 0.005) << row;
  }

  const auto wass = slurp(result.out_dir / "wasserstein.csv");
  EXPECT_NE(wass.find("player,human,fair,noisy,split\nhuman,0,"), std::string::npos) << wass;

  const auto report = cmd_report(c, log);
  const auto md = slurp(report);
  EXPECT_NE(md.find("| fair |"), std::string::npos);
  EXPECT_NE(md.find("| split |"), std::string::npos);
  EXPECT_EQ(md.find("| human |"), std::string::npos);
}

TEST(Pipeline, RerunIsByteIdentical) {
  std::map<std::string, std::string> first;
  for (int run = 0; run < 2; ++run) {
    const auto session = temp_dir("rerun");
    const auto c = run_config_from_json(scripted_config(session));
    std::ostringstream log;
    cmd_collect(c, log);
    cmd_analyze(c, log);
    cmd_report(c, log);
    const auto files = tree(session / kAnalysisDir);
    if (run == 0) {
      first = files;
    } else {
      EXPECT_EQ(files, first);
    }
    // Analysing the same session again rewrites the same bytes.
    cmd_analyze(c, log);
    cmd_report(c, log);
    EXPECT_EQ(tree(session / kAnalysisDir), files);
  }
}

TEST(Pipeline, ResumeDoesNotDuplicate) {
  const auto session = temp_dir("resume");
  auto j = scripted_config(session);
  j["games"] = {"dictator", "bomb_risk"};
  auto c = run_config_from_json(j);
  std::ostringstream log;
  cmd_collect(c, log);
  const auto path = transcript_path(c, "noisy", GameId::BombRisk);
  const auto full = read_records(path);

  // Simulate an interruption: keep 7 records and half of the 8th line.
  std::string text;
  for (std::size_t i = 0; i < 7; ++i) text += record_to_json(full[i]).dump() + "\n";
  text += record_to_json(full[7]).dump().substr(0, 20);
  write_text_file(path, text);

  const auto summary = cmd_collect(c, log);
  EXPECT_TRUE(summary.complete());
  const auto resumed = read_records(path);
  ASSERT_EQ(resumed.size(), 20u);
  for (std::size_t i = 0; i < resumed.size(); ++i) EXPECT_EQ(resumed[i].attempt_index, i);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(resumed[i], full[i]);

  // A third run has nothing left to do.
  std::ostringstream again;
  cmd_collect(c, again);
  EXPECT_EQ(read_records(path).size(), 20u);
  EXPECT_NE(again.str().find("already complete"), std::string::npos);
}

TEST(Pipeline, RemoteAgentAgainstMockEndpoint) {
  MockChatServer server([](int n) {
    if (n % 3 == 2) return std::string("Let me think about it.");
    return std::string("I choose to cooperate. My decision is $10 and I open 10 boxes.");
  });
  const auto session = temp_dir("remote");
  nlohmann::json j = {{"session_dir", session.string()},
                      {"baseline", (bt::data_dir() / "synthetic_baseline.json").string()},
                      {"n_valid", 5},
                      {"agents",
                       {{{"id", "mock-llm"}, {"kind", "remote"}, {"base_url", server.base_url()},
                         {"model", "mock"}, {"retry_backoff_ms", 0}, {"retry_limit", 10}, {"max_in_flight", 2}}}}};
  const auto c = run_config_from_json(j);
  std::ostringstream log;
  const auto summary = cmd_collect(c, log);
  EXPECT_TRUE(summary.complete()) << log.str();
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(session / "mock-llm"))
    files += e.path().extension() == ".jsonl";
  EXPECT_EQ(files, 8u);
  const auto d = load_session(session).at("mock-llm");
  EXPECT_EQ(d.at(GameId::Dictator), ActionDistribution::point_mass(make_game(GameId::Dictator), 10, 5));
  EXPECT_EQ(d.at(GameId::PrisonersDilemma).prob(pd::kCooperate), 1.0);
  EXPECT_EQ(d.at(GameId::BombRisk).prob(10), 1.0);
}

TEST(Pipeline, MissingApiKeyFailsBeforeCollecting) {
  const auto session = temp_dir("nokey");
  ::unsetenv("BEHAVBENCH_MISSING_KEY");
  nlohmann::json j = {{"session_dir", (session / "s").string()},
                      {"agents",
                       {{{"id", "m"}, {"kind", "remote"}, {"base_url", "http://127.0.0.1:1/v1"},
                         {"model", "mock"}, {"api_key_env", "BEHAVBENCH_MISSING_KEY"}}}}};
  std::ostringstream log;
  try {
    cmd_collect(run_config_from_json(j), log);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("BEHAVBENCH_MISSING_KEY"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(session / "s"));
}

TEST(Pipeline, UnreachableEndpointIsReportedPerPair) {
  const auto session = temp_dir("unreachable");
  nlohmann::json j = {{"session_dir", session.string()},
                      {"games", {"dictator"}},
                      {"n_valid", 2},
                      {"agents",
                       {{{"id", "down"}, {"kind", "remote"},
                         {"base_url", "http://127.0.0.1:" + std::to_string(bt::closed_port()) + "/v1"},
                         {"model", "m"}, {"retry_limit", 1}, {"timeout_s", 1}},
                        {{"id", "up"}, {"kind", "point_mass"}, {"fixed_action", 3}}}}};
  std::ostringstream log;
  const auto summary = cmd_collect(run_config_from_json(j), log);
  EXPECT_FALSE(summary.complete());
  ASSERT_EQ(summary.pairs.size(), 2u);
  EXPECT_EQ(summary.pairs[0].state, "failed");
  EXPECT_EQ(summary.pairs[1].state, "complete");
  const auto status = read_json_file(session / kStatusFile);
  EXPECT_EQ(status.at("complete"), false);
  EXPECT_FALSE(fs::exists(session / "down" / kDistributionsFile));
}

TEST(Pipeline, SingleGameOmitsInconsistency) {
  const auto session = temp_dir("single");
  auto j = scripted_config(session);
  j["games"] = {"dictator"};
  const auto c = run_config_from_json(j);
  std::ostringstream log;
  cmd_collect(c, log);
  const auto result = cmd_analyze(c, log);
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_NE(result.warnings[0].find("inconsistency omitted"), std::string::npos);
  EXPECT_FALSE(fs::exists(result.out_dir / "inconsistency_r1.csv"));
  EXPECT_NE(slurp(cmd_report(c, log)).find("Not computed"), std::string::npos);
}

TEST(Pipeline, AnalyzeNeedsTheBaseline) {
  const auto session = temp_dir("nobase");
  auto j = scripted_config(session);
  j["games"] = {"dictator", "trust_banker"};
  auto c = run_config_from_json(j);
  std::ostringstream log;
  cmd_collect(c, log);

  const auto partial = session / "partial_baseline.json";
  auto games = bt::synthetic_baseline().games();
  games.erase(GameId::TrustBanker);
  save_distributions(partial, games);
  c.baseline = partial;
  try {
    cmd_analyze(c, log);
    FAIL();
  } catch (const MissingBaselineError& e) {
    EXPECT_NE(std::string(e.what()).find("missing baseline for trust_banker"), std::string::npos);
  }
  c.session_dir = session / "absent";
  c.baseline = bt::data_dir() / "synthetic_baseline.json";
  EXPECT_THROW(cmd_analyze(c, log), ValidationError);
}

TEST(Report, Errors) {
  EXPECT_THROW(render_report(nlohmann::json::object()), ValidationError);
  EXPECT_THROW(render_report({{"players", {"human"}}, {"games", {"dictator"}}}), ValidationError);
  const auto session = temp_dir("noreport");
  RunConfig c;
  c.session_dir = session;
  std::ostringstream log;
  EXPECT_THROW(cmd_report(c, log), ValidationError);
  write_text_file(session / kAnalysisDir / kReportBundle, "{}");
  EXPECT_THROW(cmd_report(c, log), ValidationError);
}

TEST(Svg, HistogramIsWellFormed) {
  const auto svg = histogram_svg(ActionDistribution::point_mass(make_game(GameId::Dictator), 50), "a <b> & c");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("a &lt;b&gt; &amp; c"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
