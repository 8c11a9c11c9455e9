// behavbench: collect agent behaviour in economics games and analyse it
// against a human baseline.
//
//   behavbench collect --config run.json
//   behavbench analyze --config run.json [--baseline human.json]
//   behavbench report  --config run.json

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "behavbench/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> session;
  std::optional<std::string> games;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> baseline;
  std::optional<std::size_t> n_valid;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--session", o.session, "Session directory (overrides session_dir)");
  cmd->add_option("--games", o.games, "Comma-separated game ids (overrides games)");
  cmd->add_option("--seed", o.seed, "Run seed (overrides seed)");
  cmd->add_option("--baseline", o.baseline, "Human baseline file (overrides baseline)");
  cmd->add_option("--n-valid", o.n_valid, "Valid samples per agent and game (overrides n_valid)");
}

// Command-line overrides are applied to the JSON before parsing so that
// agent seeds derived from the run seed follow --seed.  Paths given on the
// command line are relative to the working directory.
behavbench::RunConfig load_config(const Overrides& o) {
  namespace fs = std::filesystem;
  const fs::path path(o.config);
  nlohmann::json j;
  try {
    j = behavbench::read_json_file(path);
  } catch (const behavbench::ValidationError& e) {
    throw behavbench::ConfigError(e.what());
  }
  if (!j.is_object()) throw behavbench::ConfigError("config: expected a JSON object");
  if (o.session) j["session_dir"] = fs::absolute(*o.session).string();
  if (o.baseline) j["baseline"] = fs::absolute(*o.baseline).string();
  if (o.seed) j["seed"] = *o.seed;
  if (o.n_valid) j["n_valid"] = *o.n_valid;
  if (o.games) {
    std::vector<std::string> games;
    std::stringstream ss(*o.games);
    for (std::string g; std::getline(ss, g, ',');)
      if (!g.empty()) games.push_back(g);
    j["games"] = games;
  }
  auto config = behavbench::run_config_from_json(j, path.parent_path());
  behavbench::validate_run_config(config);
  return config;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioural economics benchmark for chat agents"};
  app.require_subcommand(1);

  Overrides collect_o, analyze_o, report_o;
  auto* collect = app.add_subcommand("collect", "Collect decisions from every agent in every game");
  add_common(collect, collect_o);
  auto* analyze = app.add_subcommand("analyze", "Analyse a collected session against the human baseline");
  add_common(analyze, analyze_o);
  auto* report = app.add_subcommand("report", "Render a markdown summary of an analysed session");
  add_common(report, report_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (collect->parsed()) {
      const auto summary = behavbench::cmd_collect(load_config(collect_o), std::cerr);
      if (!summary.complete()) {
        std::cerr << "collection incomplete; see status.json in the session directory\n";
        return 2;
      }
    } else if (analyze->parsed()) {
      behavbench::cmd_analyze(load_config(analyze_o), std::cerr);
    } else if (report->parsed()) {
      const auto path = behavbench::cmd_report(load_config(report_o), std::cerr);
      std::cout << path.string() << '\n';
    }
  } catch (const behavbench::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
