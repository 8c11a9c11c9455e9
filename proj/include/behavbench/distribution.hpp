#pragma once

// Histogram representation of behaviour over a game's action space, plus the
// JSON and CSV file formats used for human baselines and agent sessions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"
#include "behavbench/record.hpp"
#include "behavbench/text.hpp"

namespace behavbench {

inline constexpr double kProbSumTolerance = 1e-9;

/// Normalised histogram over the actions of one game.  Only actions with
/// positive mass are kept in the support, in ascending order.
class ActionDistribution {
public:
  static ActionDistribution from_counts(const GameSpec& spec,
                                        const std::map<Action, std::uint64_t>& counts) {
    std::uint64_t total = 0;
    for (const auto& [a, c] : counts) total += c;
    if (total == 0) throw ValidationError("distribution: no samples");
    std::vector<Action> support;
    std::vector<double> probs;
    for (const auto& [a, c] : counts) {
      if (c == 0) continue;
      support.push_back(a);
      probs.push_back(static_cast<double>(c) / static_cast<double>(total));
    }
    return ActionDistribution(spec, std::move(support), std::move(probs), total);
  }

  static ActionDistribution from_probs(const GameSpec& spec, std::vector<Action> support,
                                       std::vector<double> probs, std::uint64_t n_samples) {
    return ActionDistribution(spec, std::move(support), std::move(probs), n_samples);
  }

  static ActionDistribution point_mass(const GameSpec& spec, Action a, std::uint64_t n = 1) {
    return ActionDistribution(spec, {a}, {1.0}, n);
  }

  const GameSpec& spec() const { return spec_; }
  GameId game() const { return spec_.id(); }
  const std::vector<Action>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  std::uint64_t n_samples() const { return n_samples_; }

  double prob(Action a) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), a);
    if (it == support_.end() || *it != a) return 0.0;
    return probs_[static_cast<std::size_t>(it - support_.begin())];
  }

  /// Probability of every action of the game, aligned with action_space().values().
  std::vector<double> dense() const {
    const auto space = spec_.action_space();
    std::vector<double> out(space.size(), 0.0);
    for (std::size_t i = 0; i < support_.size(); ++i) out[space.index_of(support_[i])] = probs_[i];
    return out;
  }

  /// Integer counts, when probs * n_samples reproduces the probabilities exactly.
  std::optional<std::map<Action, std::uint64_t>> counts() const {
    if (n_samples_ == 0) return std::nullopt;
    std::map<Action, std::uint64_t> out;
    std::uint64_t total = 0;
    const double n = static_cast<double>(n_samples_);
    for (std::size_t i = 0; i < support_.size(); ++i) {
      const double c = std::round(probs_[i] * n);
      if (c < 1 || static_cast<double>(static_cast<std::uint64_t>(c)) / n != probs_[i])
        return std::nullopt;
      out[support_[i]] = static_cast<std::uint64_t>(c);
      total += static_cast<std::uint64_t>(c);
    }
    if (total != n_samples_) return std::nullopt;
    return out;
  }

  friend bool operator==(const ActionDistribution& a, const ActionDistribution& b) {
    return a.spec_.id() == b.spec_.id() && a.spec_.params() == b.spec_.params() &&
           a.support_ == b.support_ && a.probs_ == b.probs_ && a.n_samples_ == b.n_samples_;
  }

private:
  ActionDistribution(const GameSpec& spec, std::vector<Action> support, std::vector<double> probs,
                     std::uint64_t n_samples)
      : spec_(spec), n_samples_(n_samples) {
    const std::string where(to_string(spec.id()));
    if (support.size() != probs.size())
      throw ValidationError(where + ": support and probs differ in length");
    const auto space = spec.action_space();
    std::vector<std::pair<Action, double>> entries;
    double sum = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (!std::isfinite(probs[i]) || probs[i] < 0)
        throw ValidationError(where + ": negative or non-finite probability");
      if (!space.contains(support[i]))
        throw ValidationError(where + ": action " + std::to_string(support[i]) +
                              " outside the action space");
      sum += probs[i];
      if (probs[i] > 0) entries.emplace_back(support[i], probs[i]);
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance)
      throw ValidationError(where + ": probabilities sum to " + format_number(sum) +
                            " (expected 1)");
    std::sort(entries.begin(), entries.end());
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (entries[i].first == entries[i - 1].first)
        throw ValidationError(where + ": duplicate action " + std::to_string(entries[i].first));
    for (const auto& [a, p] : entries) {
      support_.push_back(a);
      probs_.push_back(p);
    }
  }

  GameSpec spec_;
  std::vector<Action> support_;
  std::vector<double> probs_;
  std::uint64_t n_samples_ = 0;
};

/// A distribution over points on the real line, ascending.
struct PointDistribution {
  std::vector<double> points;
  std::vector<double> probs;
};

/// Numeric value of an action.  Prisoner's dilemma embeds Cooperate at 1 and
/// Defect at 0, so distances read as differences in cooperation rate.
inline double action_value(GameId g, Action a) {
  if (g == GameId::PrisonersDilemma) return a == pd::kCooperate ? 1.0 : 0.0;
  return static_cast<double>(a);
}

inline PointDistribution embed(const ActionDistribution& d) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < d.support().size(); ++i)
    pts.emplace_back(action_value(d.game(), d.support()[i]), d.probs()[i]);
  std::sort(pts.begin(), pts.end());
  PointDistribution out;
  for (const auto& [x, p] : pts) {
    out.points.push_back(x);
    out.probs.push_back(p);
  }
  return out;
}

/// Rescales a numeric action a to (a - lo) / (hi - lo).
inline PointDistribution normalize_support(const ActionDistribution& d) {
  if (d.game() == GameId::PrisonersDilemma) return embed(d);
  const auto space = d.spec().action_space();
  const double lo = space.lo();
  const double hi = space.hi();
  if (hi == lo) throw RangeError("normalize_support: degenerate action range");
  PointDistribution out = embed(d);
  for (double& x : out.points) x = (x - lo) / (hi - lo);
  return out;
}

/// Empirical distribution of the valid actions in a batch of records.
inline ActionDistribution from_records(const GameSpec& spec,
                                       const std::vector<CollectionRecord>& records) {
  std::map<Action, std::uint64_t> counts;
  for (const auto& r : records) {
    if (r.game != spec.id())
      throw ContractError("from_records: record for " + std::string(to_string(r.game)) +
                          " in a " + std::string(to_string(spec.id())) + " batch");
    if (r.parsed) ++counts[*r.parsed];
  }
  if (counts.empty())
    throw ValidationError("from_records: no valid records for " + std::string(to_string(spec.id())));
  return ActionDistribution::from_counts(spec, counts);
}

using GameDistributions = std::map<GameId, ActionDistribution>;

/// Per-game human reference distributions.
class HumanBaseline {
public:
  HumanBaseline() = default;
  explicit HumanBaseline(GameDistributions games) : games_(std::move(games)) {}

  bool has(GameId g) const { return games_.contains(g); }
  const ActionDistribution& at(GameId g) const {
    auto it = games_.find(g);
    if (it == games_.end())
      throw MissingBaselineError("missing baseline for " + std::string(to_string(g)));
    return it->second;
  }
  const GameDistributions& games() const { return games_; }

private:
  GameDistributions games_;
};

// ---------------------------------------------------------------------------
// JSON distribution files
//
// {
//   "format": "behavbench-distributions", "version": 1,
//   "game_params": { ... optional ... },
//   "games": {
//     "dictator":          {"counts": {"0": 12, "50": 38}},
//     "prisoners_dilemma": {"counts": {"cooperate": 41, "defect": 50}},
//     "trust_banker":      {"probs": {"0": 0.25, "150": 0.75}, "n_samples": 4}
//   }
// }
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDistributionsFormat = "behavbench-distributions";

namespace detail {

inline Action parse_action_key(const GameSpec& spec, const std::string& key,
                               const std::string& where) {
  const auto space = spec.action_space();
  if (!space.is_numeric()) {
    const auto lower = to_lower(key);
    const auto& names = space.labels().names;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (to_lower(names[i]) == lower) return static_cast<Action>(i);
    throw ValidationError(where + ": unknown action '" + key + "'");
  }
  Action a = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), a);
  if (ec != std::errc{} || ptr != key.data() + key.size())
    throw ValidationError(where + ": action key '" + key + "' is not an integer");
  return a;
}

inline std::string action_key(const GameSpec& spec, Action a) {
  const auto space = spec.action_space();
  return space.is_numeric() ? std::to_string(a) : to_lower(space.label(a));
}

} // namespace detail

inline ActionDistribution distribution_from_json(const GameSpec& spec, const nlohmann::json& j,
                                                 const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const bool has_counts = j.contains("counts");
  const bool has_probs = j.contains("probs");
  if (has_counts == has_probs)
    throw ValidationError(where + ": exactly one of 'counts' or 'probs' is required");
  try {
    if (has_counts) {
      const auto& c = j.at("counts");
      if (!c.is_object()) throw ValidationError(where + ".counts: expected an object");
      std::map<Action, std::uint64_t> counts;
      for (const auto& [key, value] : c.items()) {
        const std::string field = where + ".counts." + key;
        if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
          throw ValidationError(field + ": counts must be non-negative integers");
        const Action a = detail::parse_action_key(spec, key, field);
        if (!spec.action_space().contains(a))
          throw ValidationError(field + ": action outside the action space");
        if (counts.contains(a)) throw ValidationError(field + ": duplicate action");
        counts[a] = value.get<std::uint64_t>();
      }
      try {
        return ActionDistribution::from_counts(spec, counts);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ".counts: " + e.what());
      }
    }
    const auto& p = j.at("probs");
    if (!p.is_object()) throw ValidationError(where + ".probs: expected an object");
    std::vector<Action> support;
    std::vector<double> probs;
    for (const auto& [key, value] : p.items()) {
      const std::string field = where + ".probs." + key;
      if (!value.is_number()) throw ValidationError(field + ": expected a number");
      support.push_back(detail::parse_action_key(spec, key, field));
      probs.push_back(value.get<double>());
    }
    if (!j.contains("n_samples") || !j.at("n_samples").is_number_unsigned())
      throw ValidationError(where + ".n_samples: required non-negative integer alongside probs");
    try {
      return ActionDistribution::from_probs(spec, std::move(support), std::move(probs),
                                            j.at("n_samples").get<std::uint64_t>());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ".probs: " + e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline nlohmann::json distribution_to_json(const ActionDistribution& d) {
  nlohmann::json out = nlohmann::json::object();
  if (auto counts = d.counts()) {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [a, n] : *counts) c[detail::action_key(d.spec(), a)] = n;
    out["counts"] = std::move(c);
    return out;
  }
  nlohmann::json p = nlohmann::json::object();
  for (std::size_t i = 0; i < d.support().size(); ++i)
    p[detail::action_key(d.spec(), d.support()[i])] = d.probs()[i];
  out["probs"] = std::move(p);
  out["n_samples"] = d.n_samples();
  return out;
}

inline GameDistributions distributions_from_json(const nlohmann::json& j,
                                                 const GameParams& fallback = {}) {
  if (!j.is_object()) throw ValidationError("distributions file: expected a JSON object");
  if (j.contains("format") && j.at("format") != kDistributionsFormat)
    throw ValidationError("format: expected '" + std::string(kDistributionsFormat) + "'");
  const GameParams params =
      j.contains("game_params") ? game_params_from_json(j.at("game_params")) : fallback;
  if (!j.contains("games") || !j.at("games").is_object())
    throw ValidationError("games: required object mapping game id to distribution");
  GameDistributions out;
  for (const auto& [key, value] : j.at("games").items()) {
    GameId g{};
    try {
      g = parse_game_id(key);
    } catch (const ValidationError&) {
      throw ValidationError("games." + key + ": unknown game id");
    }
    out.emplace(g, distribution_from_json(GameSpec(g, params), value, "games." + key));
  }
  return out;
}

inline nlohmann::json distributions_to_json(const GameDistributions& games) {
  nlohmann::json gs = nlohmann::json::object();
  std::optional<GameParams> params;
  for (const auto& [g, d] : games) {
    if (params && !(*params == d.spec().params()))
      throw ContractError("distributions: games were built with different parameters");
    params = d.spec().params();
    gs[std::string(to_string(g))] = distribution_to_json(d);
  }
  nlohmann::json out = {{"format", kDistributionsFormat}, {"version", 1}};
  out["game_params"] = game_params_to_json(params.value_or(GameParams{}));
  out["games"] = std::move(gs);
  return out;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON: " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

inline HumanBaseline load_baseline(const std::filesystem::path& path,
                                   const GameParams& fallback = {}) {
  const auto j = read_json_file(path);
  try {
    return HumanBaseline(distributions_from_json(j, fallback));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void save_distributions(const std::filesystem::path& path, const GameDistributions& games) {
  write_text_file(path, distributions_to_json(games).dump(2) + "\n");
}

inline GameDistributions load_distributions(const std::filesystem::path& path,
                                            const GameParams& fallback = {}) {
  const auto j = read_json_file(path);
  try {
    return distributions_from_json(j, fallback);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Agent id -> its per-game distributions.
using SessionDistributions = std::map<std::string, GameDistributions>;

inline constexpr std::string_view kDistributionsFile = "distributions.json";

inline void save_session(const std::filesystem::path& dir, const SessionDistributions& session) {
  for (const auto& [agent, games] : session) save_distributions(dir / agent / kDistributionsFile, games);
}

inline SessionDistributions load_session(const std::filesystem::path& dir,
                                         const GameParams& fallback = {}) {
  if (!std::filesystem::is_directory(dir))
    throw ValidationError("session directory " + dir.string() + " does not exist");
  SessionDistributions out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const auto file = entry.path() / kDistributionsFile;
    if (std::filesystem::exists(file))
      out.emplace(entry.path().filename().string(), load_distributions(file, fallback));
  }
  return out;
}

/// One "action,probability" row per action of the game, zeros included.
inline void write_histogram_csv(std::ostream& os, const ActionDistribution& d) {
  const auto space = d.spec().action_space();
  const auto dense = d.dense();
  const auto values = space.values();
  os << "action,probability\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    os << space.label(values[i]) << ',' << format_number(dense[i]) << '\n';
}

} // namespace behavbench
