#pragma once

// Run configuration: the JSON file read by the command-line tool.
//
// {
//   "session_dir": "runs/demo",            // relative paths resolve against the config file
//   "baseline": "data/synthetic_baseline.json",
//   "prompts_dir": "prompts",              // optional; <game_id>.txt per role
//   "seed": 7,
//   "n_valid": 50,
//   "games": ["dictator", ...],            // default: all eight roles
//   "r_values": [1.0, 0.5],
//   "b_grid_step": 0.02,
//   "svg": true,
//   "game_params": { ... },                // see game_params_from_json
//   "agents": [
//     {"id": "fair", "kind": "best_response", "b": 0.5, "r": 0.5},
//     {"id": "noisy", "kind": "softmax_logit", "b": 0.6, "r": 0.5, "seed": 3},
//     {"id": "half", "kind": "point_mass", "fixed_action": 50,
//      "fixed_actions": {"public_goods": 10, "prisoners_dilemma": "cooperate"}},
//     {"id": "gpt", "kind": "remote", "base_url": "https://api.openai.com/v1",
//      "model": "gpt-4o", "api_key_env": "OPENAI_API_KEY", "temperature": 1.0,
//      "max_in_flight": 4, "timeout_s": 60, "retry_limit": 5}
//   ]
// }
//
// API keys are only ever read from the environment.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "behavbench/agent.hpp"
#include "behavbench/connector.hpp"
#include "behavbench/distribution.hpp"
#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"
#include "behavbench/text.hpp"

namespace behavbench {

struct AgentEntry {
  AgentProfile profile;
  std::optional<EndpointConfig> endpoint; // Remote agents only
};

struct RunConfig {
  std::filesystem::path session_dir;
  std::filesystem::path baseline;
  std::filesystem::path prompts_dir;
  std::vector<AgentEntry> agents;
  std::vector<GameId> games{kAllGames.begin(), kAllGames.end()};
  std::size_t n_valid = 50;
  std::vector<double> r_values{1.0, 0.5};
  double b_grid_step = 0.02;
  bool svg = true;
  GameParams game_params;
  std::uint64_t seed = 0;
};

/// Seed of a scripted agent that did not declare one.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view agent_id) {
  return fnv1a64(std::to_string(run_seed) + ":" + std::string(agent_id));
}

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": missing or wrong type");
  }
}

inline Action action_from_json(const nlohmann::json& v, GameId g, const std::string& where) {
  if (v.is_number_integer()) return v.get<Action>();
  if (v.is_string() && g == GameId::PrisonersDilemma) {
    const auto s = to_lower(v.get<std::string>());
    if (s == "cooperate") return pd::kCooperate;
    if (s == "defect") return pd::kDefect;
  }
  throw ConfigError(where + ": invalid action");
}

inline AgentEntry agent_from_json(const nlohmann::json& j, std::size_t index, std::uint64_t run_seed) {
  const std::string where = "agents[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  AgentEntry e;
  auto& p = e.profile;
  p.agent_id = get_field<std::string>(j, "id", where);
  if (p.agent_id.empty() || p.agent_id.find_first_of("/\\") != std::string::npos ||
      p.agent_id == "." || p.agent_id == ".." || p.agent_id == "human")
    throw ConfigError(where + ".id: '" + p.agent_id + "' is not a usable agent id");
  try {
    p.kind = parse_agent_kind(get_field<std::string>(j, "kind", where));
  } catch (const ValidationError& err) {
    throw ConfigError(where + ".kind: " + err.what());
  }
  p.seed = j.contains("seed") ? get_field<std::uint64_t>(j, "seed", where)
                              : derive_seed(run_seed, p.agent_id);
  if (j.contains("b")) p.utility.b = get_field<double>(j, "b", where);
  if (j.contains("r")) p.utility.r = get_field<double>(j, "r", where);
  if (j.contains("fixed_action"))
    p.fixed_action = action_from_json(j.at("fixed_action"), GameId::Dictator, where + ".fixed_action");
  if (j.contains("fixed_actions")) {
    for (const auto& [key, v] : j.at("fixed_actions").items()) {
      GameId g{};
      try {
        g = parse_game_id(key);
      } catch (const ValidationError&) {
        throw ConfigError(where + ".fixed_actions." + key + ": unknown game id");
      }
      p.fixed_actions[g] = action_from_json(v, g, where + ".fixed_actions." + key);
    }
  }
  if (p.kind == AgentKind::Remote) {
    EndpointConfig ep;
    ep.base_url = get_field<std::string>(j, "base_url", where);
    ep.model_name = get_field<std::string>(j, "model", where);
    if (j.contains("api_key_env")) ep.api_key_env = get_field<std::string>(j, "api_key_env", where);
    if (j.contains("temperature") && !j.at("temperature").is_null())
      ep.temperature = get_field<double>(j, "temperature", where);
    if (j.contains("max_in_flight")) ep.max_in_flight = get_field<int>(j, "max_in_flight", where);
    if (j.contains("timeout_s")) ep.per_request_timeout_s = get_field<double>(j, "timeout_s", where);
    if (j.contains("retry_limit")) ep.retry_limit = get_field<int>(j, "retry_limit", where);
    if (j.contains("retry_backoff_ms"))
      ep.retry_backoff_ms = get_field<int>(j, "retry_backoff_ms", where);
    try {
      ep.validate();
    } catch (const ConfigError& err) {
      throw ConfigError(where + ": " + err.what());
    }
    e.endpoint = ep;
  }
  try {
    p.validate();
  } catch (const Error& err) {
    throw ConfigError(where + ": " + err.what());
  }
  return e;
}

} // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::vector<std::string> known = {
      "session_dir", "baseline", "prompts_dir", "agents", "games", "n_valid", "r_values",
      "b_grid_step", "svg", "game_params", "seed"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("config: unknown key '" + key + "'");

  RunConfig c;
  const std::string where = "config";
  if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j, "seed", where);
  if (j.contains("session_dir"))
    c.session_dir = detail::resolve(base_dir, detail::get_field<std::string>(j, "session_dir", where));
  if (j.contains("baseline"))
    c.baseline = detail::resolve(base_dir, detail::get_field<std::string>(j, "baseline", where));
  if (j.contains("prompts_dir"))
    c.prompts_dir = detail::resolve(base_dir, detail::get_field<std::string>(j, "prompts_dir", where));
  if (j.contains("n_valid")) c.n_valid = detail::get_field<std::size_t>(j, "n_valid", where);
  if (j.contains("r_values")) c.r_values = detail::get_field<std::vector<double>>(j, "r_values", where);
  if (j.contains("b_grid_step")) c.b_grid_step = detail::get_field<double>(j, "b_grid_step", where);
  if (j.contains("svg")) c.svg = detail::get_field<bool>(j, "svg", where);
  if (j.contains("game_params")) {
    try {
      c.game_params = game_params_from_json(j.at("game_params"));
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("games")) {
    c.games.clear();
    for (const auto& g : detail::get_field<std::vector<std::string>>(j, "games", where)) {
      try {
        c.games.push_back(parse_game_id(g));
      } catch (const ValidationError& e) {
        throw ConfigError(std::string("config.games: ") + e.what());
      }
    }
  }
  if (j.contains("agents")) {
    const auto& agents = j.at("agents");
    if (!agents.is_array()) throw ConfigError("config.agents: expected an array");
    for (std::size_t i = 0; i < agents.size(); ++i)
      c.agents.push_back(detail::agent_from_json(agents[i], i, c.seed));
  }
  return c;
}

inline void validate_run_config(const RunConfig& c) {
  if (c.session_dir.empty()) throw ConfigError("config: session_dir is required");
  if (c.n_valid < 1) throw ConfigError("config: n_valid must be at least 1");
  if (c.games.empty()) throw ConfigError("config: no games selected");
  for (double r : c.r_values)
    if (!(r > 0)) throw ConfigError("config.r_values: r must be positive");
  for (std::size_t i = 0; i < c.agents.size(); ++i)
    for (std::size_t k = i + 1; k < c.agents.size(); ++k)
      if (c.agents[i].profile.agent_id == c.agents[k].profile.agent_id)
        throw ConfigError("config.agents: duplicate id '" + c.agents[i].profile.agent_id + "'");
  std::vector<GameId> sorted = c.games;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("config.games: duplicate game");
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

/// Canonical JSON of the effective configuration.  Secrets are never part of
/// it: endpoints record only the name of the key variable.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : c.agents) {
    const auto& p = a.profile;
    nlohmann::json j = {{"id", p.agent_id}, {"kind", std::string(to_string(p.kind))}, {"seed", p.seed}};
    if (p.kind == AgentKind::BestResponse || p.kind == AgentKind::SoftmaxLogit) {
      j["b"] = p.utility.b;
      j["r"] = p.utility.r;
    }
    if (p.fixed_action) j["fixed_action"] = *p.fixed_action;
    if (!p.fixed_actions.empty()) {
      nlohmann::json fa = nlohmann::json::object();
      for (const auto& [g, act] : p.fixed_actions) fa[std::string(to_string(g))] = act;
      j["fixed_actions"] = fa;
    }
    if (a.endpoint) {
      const auto& ep = *a.endpoint;
      j["base_url"] = ep.base_url;
      j["model"] = ep.model_name;
      j["api_key_env"] = ep.api_key_env;
      j["temperature"] = ep.temperature ? nlohmann::json(*ep.temperature) : nlohmann::json(nullptr);
      j["max_in_flight"] = ep.max_in_flight;
      j["timeout_s"] = ep.per_request_timeout_s;
      j["retry_limit"] = ep.retry_limit;
      j["retry_backoff_ms"] = ep.retry_backoff_ms;
    }
    agents.push_back(std::move(j));
  }
  nlohmann::json games = nlohmann::json::array();
  for (GameId g : c.games) games.push_back(std::string(to_string(g)));
  return {
      {"session_dir", c.session_dir.generic_string()},
      {"baseline", c.baseline.generic_string()},
      {"prompts_dir", c.prompts_dir.generic_string()},
      {"seed", c.seed},
      {"n_valid", c.n_valid},
      {"games", games},
      {"r_values", c.r_values},
      {"b_grid_step", c.b_grid_step},
      {"svg", c.svg},
      {"game_params", game_params_to_json(c.game_params)},
      {"agents", agents},
  };
}

/// Hash of the analysis-relevant configuration.  The session directory is
/// left out so that a copied session analyses to identical bytes.
inline std::string config_hash(const RunConfig& c) {
  auto j = run_config_to_json(c);
  j.erase("session_dir");
  return hex64(fnv1a64(j.dump()));
}

} // namespace behavbench
