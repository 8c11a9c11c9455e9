#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "behavbench/analysis.hpp"
#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"
#include "behavbench/partner.hpp"
#include "behavbench/random.hpp"
#include "behavbench/text.hpp"
#include "behavbench/utility.hpp"

namespace behavbench {

enum class AgentKind { BestResponse, SoftmaxLogit, PointMass, UniformRandom, Remote };

inline constexpr std::string_view to_string(AgentKind k) {
  switch (k) {
  case AgentKind::BestResponse: return "best_response";
  case AgentKind::SoftmaxLogit: return "softmax_logit";
  case AgentKind::PointMass: return "point_mass";
  case AgentKind::UniformRandom: return "uniform_random";
  case AgentKind::Remote: return "remote";
  }
  return "?";
}

inline AgentKind parse_agent_kind(std::string_view s) {
  for (auto k : {AgentKind::BestResponse, AgentKind::SoftmaxLogit, AgentKind::PointMass,
                 AgentKind::UniformRandom, AgentKind::Remote})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown agent kind '" + std::string(s) + "'");
}

struct AgentProfile {
  std::string agent_id;
  AgentKind kind = AgentKind::BestResponse;
  UtilityParams utility;                   // BestResponse, SoftmaxLogit
  std::optional<Action> fixed_action;      // PointMass, all games
  std::map<GameId, Action> fixed_actions;  // PointMass, per-game override
  std::uint64_t seed = 0;

  void validate() const {
    if (agent_id.empty()) throw ValidationError("agent: empty agent_id");
    if (kind == AgentKind::BestResponse || kind == AgentKind::SoftmaxLogit) utility.validate();
    if (kind == AgentKind::PointMass && !fixed_action && fixed_actions.empty())
      throw ValidationError("agent " + agent_id + ": point_mass needs fixed_action");
  }
};

namespace detail {

/// Bomb Risk has no partner, so its utility is the normalised risk-neutral
/// expected payoff.
inline std::vector<double> bomb_utilities(const GameSpec& spec) {
  const auto actions = spec.action_space().values();
  std::vector<double> u(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) u[i] = bomb_payoff_ev(spec, actions[i]);
  const double best = *std::max_element(u.begin(), u.end());
  if (!(best > 0)) throw NumericalError("bomb_risk: expected payoff is zero for every action");
  for (double& v : u) v /= best;
  return u;
}

} // namespace detail

inline std::vector<double> softmax_from_utilities(std::vector<double> u) {
  const double top = *std::max_element(u.begin(), u.end());
  double z = 0;
  for (double& v : u) z += v = std::exp(kLogitScale * (v - top));
  for (double& v : u) v /= z;
  return u;
}

/// Normalised utility of every action that a scripted agent maximises.
inline std::vector<double> choice_utilities(const GameSpec& spec, const PartnerModel& partner,
                                            const UtilityParams& p) {
  if (spec.id() == GameId::BombRisk) return detail::bomb_utilities(spec);
  return normalized_utilities(spec, partner, p);
}

/// Choice probabilities of a SoftmaxLogit agent: the same logit law the
/// estimator fits, Pr(k) proportional to exp(kLogitScale * u_k).
inline std::vector<double> softmax_choice_probs(const GameSpec& spec, const PartnerModel& partner,
                                                const UtilityParams& p) {
  return softmax_from_utilities(choice_utilities(spec, partner, p));
}

/// A scripted agent.  Owns its RNG, so one instance must not be shared
/// between threads.
class Agent {
public:
  explicit Agent(AgentProfile profile) : profile_(std::move(profile)), rng_(profile_.seed) {
    profile_.validate();
  }

  const AgentProfile& profile() const { return profile_; }

  /// Decision without a partner model.  Utility-driven agents need one for
  /// games whose payoff depends on the partner's decision.
  Action decide(const GameSpec& spec) {
    if (!needs_kind_partner() || spec.id() == GameId::BombRisk) return decide_impl(spec, nullptr);
    if (needs_partner_action(spec.id()))
      throw ContractError("agent " + profile_.agent_id + ": missing partner model for " +
                          std::string(to_string(spec.id())));
    const auto none = PartnerModel::none(spec);
    return decide_impl(spec, &none);
  }

  Action decide(const GameSpec& spec, const PartnerModel& partner) {
    return decide_impl(spec, &partner);
  }

private:
  Action decide_impl(const GameSpec& spec, const PartnerModel* partner) {
    const auto space = spec.action_space();
    switch (profile_.kind) {
    case AgentKind::Remote:
      throw ContractError("agent " + profile_.agent_id +
                          ": remote agents are driven by the collector, not decide()");
    case AgentKind::PointMass: {
      auto it = profile_.fixed_actions.find(spec.id());
      const Action a = it != profile_.fixed_actions.end() ? it->second : *profile_.fixed_action;
      if (!space.contains(a))
        throw RangeError("agent " + profile_.agent_id + ": fixed action " + std::to_string(a) +
                         " outside the " + std::string(to_string(spec.id())) + " action space");
      return a;
    }
    case AgentKind::UniformRandom: return space.values()[uniform_index(rng_, space.size())];
    case AgentKind::BestResponse: {
      const auto u = utilities(spec, partner);
      // max_element returns the first maximum: ties go to the smallest action.
      return space.values()[static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin())];
    }
    case AgentKind::SoftmaxLogit: {
      const auto cdf = cumulative(softmax_from_utilities(utilities(spec, partner)));
      return space.values()[sample_from_cdf(cdf, rng_)];
    }
    }
    throw ContractError("unhandled agent kind");
  }

  std::vector<double> utilities(const GameSpec& spec, const PartnerModel* partner) const {
    if (spec.id() == GameId::BombRisk) return detail::bomb_utilities(spec);
    if (partner == nullptr)
      throw ContractError("agent " + profile_.agent_id + ": missing partner model for " +
                          std::string(to_string(spec.id())));
    return choice_utilities(spec, *partner, profile_.utility);
  }

  bool needs_kind_partner() const {
    return profile_.kind == AgentKind::BestResponse || profile_.kind == AgentKind::SoftmaxLogit;
  }

  AgentProfile profile_;
  Rng rng_;
};

/// Canonical reply text for a scripted decision, parseable by parse_action.
inline std::string reply_text(const GameSpec& spec, Action a) {
  const auto space = spec.action_space();
  if (!space.is_numeric()) return "I choose to " + space.label(a) + ".";
  if (spec.id() == GameId::BombRisk) return "I will open " + std::to_string(a) + " boxes.";
  return "My decision is $" + std::to_string(a) + ".";
}

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

namespace detail {

struct NumberToken {
  long long value = 0;
  bool integral = true;
  bool marked = false;
};

inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool next_word_is(std::string_view lower, std::size_t pos,
                         std::initializer_list<std::string_view> words) {
  while (pos < lower.size() && lower[pos] == ' ') ++pos;
  for (auto w : words)
    if (lower.substr(pos, w.size()) == w &&
        (pos + w.size() == lower.size() || !is_alpha(lower[pos + w.size()])))
      return true;
  return false;
}

/// Numbers in the text.  A number is "marked" when written as a dollar amount
/// ($50, 50 dollars) or, for count games, followed by the counted noun.
inline std::vector<NumberToken> scan_numbers(std::string_view text, bool counts_boxes) {
  const std::string lower = to_lower(text);
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < lower.size()) {
    if (!is_digit(lower[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string digits;
    // Digits, allowing thousands separators ("1,000").
    auto thousands_comma = [&](std::size_t k) {
      return lower[k] == ',' && k + 3 < lower.size() && is_digit(lower[k + 1]) &&
             is_digit(lower[k + 2]) && is_digit(lower[k + 3]) &&
             (k + 4 == lower.size() || !is_digit(lower[k + 4]));
    };
    while (i < lower.size() && (is_digit(lower[i]) || thousands_comma(i))) {
      if (lower[i] != ',') digits += lower[i];
      ++i;
    }
    NumberToken tok;
    if (i + 1 < lower.size() && lower[i] == '.' && is_digit(lower[i + 1])) {
      ++i;
      while (i < lower.size() && is_digit(lower[i])) {
        if (lower[i] != '0') tok.integral = false;
        ++i;
      }
    }
    const bool glued = (start > 0 && is_alpha(lower[start - 1])) ||
                       (i < lower.size() && is_alpha(lower[i]));
    if (glued || digits.size() > 12) continue;
    tok.value = std::stoll(digits);
    const bool minus = start > 0 && lower[start - 1] == '-' &&
                       (start < 2 || !(is_digit(lower[start - 2]) || is_alpha(lower[start - 2])));
    if (minus) tok.value = -tok.value;
    std::size_t back = start;
    while (back > 0 && lower[back - 1] == ' ') --back;
    const bool dollar_sign = back > 0 && lower[back - 1] == '$';
    const bool dollar_word = next_word_is(lower, i, {"dollars", "dollar", "usd", "bucks"});
    const bool box_word = counts_boxes && next_word_is(lower, i, {"boxes", "box"});
    tok.marked = dollar_sign || dollar_word || box_word;
    out.push_back(tok);
  }
  return out;
}

inline bool negated_before(std::string_view lower, std::size_t pos) {
  const std::size_t from = pos >= 12 ? pos - 12 : 0;
  const auto window = lower.substr(from, pos - from);
  return window.find("not ") != std::string_view::npos ||
         window.find("n't ") != std::string_view::npos ||
         window.find("never ") != std::string_view::npos;
}

inline bool decision_before(std::string_view lower, std::size_t pos) {
  std::size_t from = pos >= 48 ? pos - 48 : 0;
  const auto stop = lower.substr(from, pos - from).find_last_of(".!?\n");
  if (stop != std::string_view::npos) from += stop + 1;
  const auto window = lower.substr(from, pos - from);
  for (std::string_view w : {"choose", "chose", "choice", "pick", "select", "decide", "decision",
                             "will", "answer", "go with", "opt"})
    if (window.find(w) != std::string_view::npos) return true;
  return false;
}

inline std::optional<Action> parse_move(std::string_view text) {
  const std::string lower = to_lower(text);
  struct Hit {
    std::size_t pos;
    Action move;
  };
  std::vector<Hit> hits;
  for (auto [stem, move] : {std::pair<std::string_view, Action>{"cooperat", pd::kCooperate},
                            {"co-operat", pd::kCooperate},
                            {"defect", pd::kDefect}}) {
    for (auto p = lower.find(stem); p != std::string::npos; p = lower.find(stem, p + 1))
      if (!negated_before(lower, p)) hits.push_back({p, move});
  }
  if (hits.empty()) return std::nullopt;
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  const bool all_same = std::all_of(hits.begin(), hits.end(),
                                    [&](const Hit& h) { return h.move == hits.front().move; });
  if (all_same) return hits.front().move;
  for (auto it = hits.rbegin(); it != hits.rend(); ++it)
    if (decision_before(lower, it->pos)) return it->move;
  return std::nullopt;
}

} // namespace detail

/// Extracts the decision from a free-text reply; nullopt marks it invalid.
///
/// Numeric games: the last in-range dollar amount (or "N boxes" for Bomb Risk)
/// wins; otherwise a single distinct in-range integer is accepted; anything
/// else is ambiguous.  Prisoner's dilemma: "cooperate"/"defect" keywords,
/// case-insensitive, with a decision phrase breaking ties.  Never throws.
inline std::optional<Action> parse_action(std::string_view raw_reply, const GameSpec& spec) noexcept {
  try {
    const auto space = spec.action_space();
    if (!space.is_numeric()) return detail::parse_move(raw_reply);

    const auto tokens = detail::scan_numbers(raw_reply, spec.id() == GameId::BombRisk);
    auto in_range = [&](const detail::NumberToken& t) {
      return t.integral && t.value >= space.lo() && t.value <= space.hi() &&
             space.contains(static_cast<Action>(t.value));
    };
    std::optional<Action> marked;
    for (const auto& t : tokens)
      if (t.marked && in_range(t)) marked = static_cast<Action>(t.value);
    if (marked) return marked;

    std::optional<Action> single;
    for (const auto& t : tokens) {
      if (!in_range(t)) continue;
      if (single && *single != t.value) return std::nullopt;
      single = static_cast<Action>(t.value);
    }
    return single;
  } catch (...) {
    return std::nullopt;
  }
}

} // namespace behavbench
