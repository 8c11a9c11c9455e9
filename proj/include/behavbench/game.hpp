#pragma once

// The six games (eight player roles), their discrete action spaces and the
// own/partner payoff rules.  Every numeric constant lives in GameParams so an
// alternative parameterisation can be loaded from a config file.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "behavbench/errors.hpp"

namespace behavbench {

enum class GameId {
  Dictator,
  UltimatumProposer,
  UltimatumResponder,
  TrustInvestor,
  TrustBanker,
  PublicGoods,
  BombRisk,
  PrisonersDilemma,
};

/// Display order of the roles (panels a-h of the usual histogram figure).
inline constexpr std::array<GameId, 8> kAllGames = {
    GameId::Dictator,     GameId::UltimatumProposer, GameId::UltimatumResponder,
    GameId::TrustInvestor, GameId::TrustBanker,      GameId::PublicGoods,
    GameId::BombRisk,     GameId::PrisonersDilemma,
};

inline constexpr std::string_view to_string(GameId g) {
  switch (g) {
  case GameId::Dictator: return "dictator";
  case GameId::UltimatumProposer: return "ultimatum_proposer";
  case GameId::UltimatumResponder: return "ultimatum_responder";
  case GameId::TrustInvestor: return "trust_investor";
  case GameId::TrustBanker: return "trust_banker";
  case GameId::PublicGoods: return "public_goods";
  case GameId::BombRisk: return "bomb_risk";
  case GameId::PrisonersDilemma: return "prisoners_dilemma";
  }
  return "?";
}

inline constexpr std::string_view display_name(GameId g) {
  switch (g) {
  case GameId::Dictator: return "Dictator";
  case GameId::UltimatumProposer: return "Ultimatum - Proposer";
  case GameId::UltimatumResponder: return "Ultimatum - Responder";
  case GameId::TrustInvestor: return "Trust - Investor";
  case GameId::TrustBanker: return "Trust - Banker";
  case GameId::PublicGoods: return "Public Goods";
  case GameId::BombRisk: return "Bomb Risk";
  case GameId::PrisonersDilemma: return "Prisoner's Dilemma";
  }
  return "?";
}

inline GameId parse_game_id(std::string_view name) {
  for (GameId g : kAllGames)
    if (to_string(g) == name) return g;
  throw ValidationError("unknown game id '" + std::string(name) + "'");
}

inline constexpr std::size_t game_index(GameId g) { return static_cast<std::size_t>(g); }

/// False only for Bomb Risk, which has no partner and hence no two-payoff utility.
inline constexpr bool has_partner_payoff(GameId g) { return g != GameId::BombRisk; }

/// Games whose payoff depends on a partner decision.
inline constexpr bool needs_partner_action(GameId g) {
  switch (g) {
  case GameId::UltimatumProposer:
  case GameId::UltimatumResponder:
  case GameId::TrustInvestor:
  case GameId::PublicGoods:
  case GameId::PrisonersDilemma: return true;
  default: return false;
  }
}

/// Actions are integers.  Numeric games use the amount itself; labelled games
/// use the label index.
using Action = int;

namespace pd {
inline constexpr Action kCooperate = 0;
inline constexpr Action kDefect = 1;
} // namespace pd

/// One-shot prisoner's dilemma payoffs: reward, temptation, punishment, sucker.
struct PdMatrix {
  double reward = 200;
  double temptation = 300;
  double punishment = 100;
  double sucker = 0;

  bool is_dilemma() const {
    return temptation > reward && reward > punishment && punishment > sucker &&
           2 * reward > temptation + sucker;
  }
  friend bool operator==(const PdMatrix&, const PdMatrix&) = default;
};

struct GameParams {
  int endowment = 100;              // Dictator, Ultimatum, Trust investor
  int public_goods_endowment = 20;
  double trust_multiplier = 3.0;
  int trust_banker_investment = 50; // investment the banker responds to
  int public_goods_players = 4;
  double public_goods_multiplier = 2.0;
  int bomb_boxes = 100;
  PdMatrix pd;

  /// Amount the banker holds after the investment is multiplied.
  int trust_banker_receipts() const {
    return static_cast<int>(std::floor(trust_multiplier * trust_banker_investment + 1e-9));
  }

  void validate() const {
    if (endowment < 0 || public_goods_endowment < 0 || trust_banker_investment < 0)
      throw ValidationError("game_params: money parameters must be non-negative");
    if (!(trust_multiplier > 1.0))
      throw ValidationError("game_params.trust_multiplier: must exceed 1");
    if (trust_banker_investment > endowment)
      throw ValidationError("game_params.trust_banker_investment: exceeds the investor endowment");
    if (public_goods_players < 2)
      throw ValidationError("game_params.public_goods_players: need at least 2 players");
    if (!(public_goods_multiplier > 1.0) || !(public_goods_multiplier < public_goods_players))
      throw ValidationError(
          "game_params.public_goods_multiplier: must satisfy 1 < M < public_goods_players");
    if (bomb_boxes < 1) throw ValidationError("game_params.bomb_boxes: must be positive");
    if (!pd.is_dilemma())
      throw ValidationError("game_params.pd_matrix: requires T > R > P > S and 2R > T + S");
    if (pd.sucker < 0) throw ValidationError("game_params.pd_matrix: payoffs must be non-negative");
  }
  friend bool operator==(const GameParams&, const GameParams&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  int step = 1;
};

struct Labels {
  std::vector<std::string> names;
};

class ActionSpace {
public:
  explicit ActionSpace(IntRange r) : space_(r) {
    if (r.lo > r.hi || r.step < 1) throw ValidationError("action space: invalid integer range");
  }
  explicit ActionSpace(Labels l) : space_(std::move(l)) {
    const auto& n = std::get<Labels>(space_).names;
    if (n.empty()) throw ValidationError("action space: empty label set");
    for (std::size_t i = 0; i < n.size(); ++i)
      for (std::size_t j = i + 1; j < n.size(); ++j)
        if (n[i] == n[j]) throw ValidationError("action space: duplicate label '" + n[i] + "'");
  }

  bool is_numeric() const { return std::holds_alternative<IntRange>(space_); }
  const IntRange& range() const { return std::get<IntRange>(space_); }
  const Labels& labels() const { return std::get<Labels>(space_); }

  /// Smallest and largest action code.
  Action lo() const { return is_numeric() ? range().lo : 0; }
  Action hi() const {
    if (!is_numeric()) return static_cast<Action>(labels().names.size()) - 1;
    const auto& r = range();
    return r.lo + (r.hi - r.lo) / r.step * r.step;
  }

  std::size_t size() const {
    if (!is_numeric()) return labels().names.size();
    return static_cast<std::size_t>((range().hi - range().lo) / range().step) + 1;
  }

  bool contains(Action a) const {
    if (!is_numeric()) return a >= 0 && static_cast<std::size_t>(a) < labels().names.size();
    const auto& r = range();
    return a >= r.lo && a <= r.hi && (a - r.lo) % r.step == 0;
  }

  /// All actions in ascending order.
  std::vector<Action> values() const {
    std::vector<Action> out;
    out.reserve(size());
    if (is_numeric()) {
      for (Action a = range().lo; a <= range().hi; a += range().step) out.push_back(a);
    } else {
      for (std::size_t i = 0; i < labels().names.size(); ++i) out.push_back(static_cast<Action>(i));
    }
    return out;
  }

  /// Position of an action within values().
  std::size_t index_of(Action a) const {
    if (!contains(a)) throw RangeError("action " + std::to_string(a) + " is not in the action space");
    return is_numeric() ? static_cast<std::size_t>((a - range().lo) / range().step)
                        : static_cast<std::size_t>(a);
  }

  std::string label(Action a) const {
    if (!contains(a)) throw RangeError("action " + std::to_string(a) + " is not in the action space");
    return is_numeric() ? std::to_string(a) : labels().names[static_cast<std::size_t>(a)];
  }

  friend bool operator==(const ActionSpace& a, const ActionSpace& b) {
    if (a.is_numeric() != b.is_numeric()) return false;
    if (a.is_numeric())
      return a.range().lo == b.range().lo && a.range().hi == b.range().hi &&
             a.range().step == b.range().step;
    return a.labels().names == b.labels().names;
  }

private:
  std::variant<IntRange, Labels> space_;
};

struct PayoffPair {
  double own = 0;
  double partner = 0;
  friend bool operator==(const PayoffPair&, const PayoffPair&) = default;
};

/// A game role together with its parameters.  Immutable once built.
class GameSpec {
public:
  explicit GameSpec(GameId id, GameParams params = {}) : id_(id), params_(params) {
    params_.validate();
  }

  GameId id() const { return id_; }
  const GameParams& params() const { return params_; }
  ActionSpace action_space() const;

  /// Closed interval the partner variable lives in (meaningless for games
  /// without a partner decision).
  std::pair<double, double> partner_range() const;

private:
  GameId id_;
  GameParams params_;
};

inline ActionSpace GameSpec::action_space() const {
  switch (id_) {
  case GameId::Dictator:
  case GameId::UltimatumProposer:
  case GameId::UltimatumResponder:
  case GameId::TrustInvestor: return ActionSpace(IntRange{0, params_.endowment});
  case GameId::TrustBanker: return ActionSpace(IntRange{0, params_.trust_banker_receipts()});
  case GameId::PublicGoods: return ActionSpace(IntRange{0, params_.public_goods_endowment});
  case GameId::BombRisk: return ActionSpace(IntRange{0, params_.bomb_boxes});
  case GameId::PrisonersDilemma: return ActionSpace(Labels{{"Cooperate", "Defect"}});
  }
  throw ContractError("unhandled game");
}

inline std::pair<double, double> GameSpec::partner_range() const {
  switch (id_) {
  case GameId::UltimatumProposer:
  case GameId::UltimatumResponder: return {0.0, static_cast<double>(params_.endowment)};
  case GameId::TrustInvestor: return {0.0, 1.0};
  case GameId::PublicGoods:
    return {0.0, static_cast<double>((params_.public_goods_players - 1) *
                                     params_.public_goods_endowment)};
  case GameId::PrisonersDilemma: return {0.0, 1.0};
  default: return {0.0, 0.0};
  }
}

inline GameSpec make_game(GameId id, const GameParams& params = {}) { return GameSpec(id, params); }

/// Risk-neutral expected payoff of opening n boxes with one bomb placed
/// uniformly among B boxes and $1 per safe box: n * (B - n) / B.
inline double bomb_payoff_ev(const GameSpec& spec, int n) {
  const int boxes = spec.params().bomb_boxes;
  if (n < 0 || n > boxes)
    throw RangeError("bomb_risk: boxes opened " + std::to_string(n) + " outside 0.." +
                     std::to_string(boxes));
  return static_cast<double>(n) * static_cast<double>(boxes - n) / static_cast<double>(boxes);
}

/// Own and partner payoff of one play.
///
/// The meaning of `partner` depends on the role:
///   UltimatumProposer  - the responder's minimum acceptable amount m
///   UltimatumResponder - the proposer's offer x
///   TrustInvestor      - the fraction f in [0,1] of the multiplied amount returned
///   PublicGoods        - the sum of the other players' contributions
///   PrisonersDilemma   - the partner's move (pd::kCooperate / pd::kDefect)
/// Dictator, TrustBanker and BombRisk take no partner.  BombRisk reports its
/// expected own payoff with a zero partner payoff.
inline PayoffPair payoff(const GameSpec& spec, Action own, std::optional<double> partner) {
  const auto space = spec.action_space();
  if (!space.contains(own))
    throw RangeError(std::string(to_string(spec.id())) + ": action " + std::to_string(own) +
                     " out of range");
  const GameParams& p = spec.params();
  const GameId g = spec.id();

  if (needs_partner_action(g)) {
    if (!partner)
      throw ContractError(std::string(to_string(g)) + ": partner action required");
    if (!std::isfinite(*partner)) throw RangeError("partner action must be finite");
    const auto [plo, phi] = spec.partner_range();
    if (*partner < plo || *partner > phi)
      throw RangeError(std::string(to_string(g)) + ": partner action out of range");
  } else if (partner) {
    throw ContractError(std::string(to_string(g)) + ": takes no partner action");
  }

  const double e = p.endowment;
  const double x = own;
  switch (g) {
  case GameId::Dictator: return {e - x, x};
  case GameId::UltimatumProposer:
    if (x >= *partner) return {e - x, x};
    return {0, 0};
  case GameId::UltimatumResponder: {
    const double offer = *partner;
    if (offer >= x) return {offer, e - offer};
    return {0, 0};
  }
  case GameId::TrustInvestor: {
    const double sent = p.trust_multiplier * x;
    const double back = *partner * sent;
    return {e - x + back, sent - back};
  }
  case GameId::TrustBanker: {
    const double held = p.trust_banker_receipts();
    return {held - x, e - p.trust_banker_investment + x};
  }
  case GameId::PublicGoods: {
    const double n = p.public_goods_players;
    const double share = p.public_goods_multiplier * (x + *partner) / n;
    const double endow = p.public_goods_endowment;
    // The others' mean payoff only depends on their mean contribution.
    return {endow - x + share, endow - *partner / (n - 1) + share};
  }
  case GameId::BombRisk: return {bomb_payoff_ev(spec, own), 0};
  case GameId::PrisonersDilemma: {
    if (*partner != pd::kCooperate && *partner != pd::kDefect)
      throw RangeError("prisoners_dilemma: partner move must be Cooperate or Defect");
    const bool me_c = own == pd::kCooperate;
    const bool them_c = *partner == pd::kCooperate;
    if (me_c && them_c) return {p.pd.reward, p.pd.reward};
    if (me_c) return {p.pd.sucker, p.pd.temptation};
    if (them_c) return {p.pd.temptation, p.pd.sucker};
    return {p.pd.punishment, p.pd.punishment};
  }
  }
  throw ContractError("unhandled game");
}

/// Reads game parameters from a JSON object.  Missing keys keep their
/// defaults; unknown keys are rejected so typos do not pass silently.
inline GameParams game_params_from_json(const nlohmann::json& j) {
  GameParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ValidationError("game_params: expected an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "endowment") p.endowment = value.get<int>();
      else if (key == "public_goods_endowment") p.public_goods_endowment = value.get<int>();
      else if (key == "trust_multiplier") p.trust_multiplier = value.get<double>();
      else if (key == "trust_banker_investment") p.trust_banker_investment = value.get<int>();
      else if (key == "public_goods_players") p.public_goods_players = value.get<int>();
      else if (key == "public_goods_multiplier") p.public_goods_multiplier = value.get<double>();
      else if (key == "bomb_boxes") p.bomb_boxes = value.get<int>();
      else if (key == "pd_matrix") {
        const auto v = value.get<std::vector<double>>();
        if (v.size() != 4) throw ValidationError("game_params.pd_matrix: expected [R, T, P, S]");
        p.pd = PdMatrix{v[0], v[1], v[2], v[3]};
      } else
        throw ValidationError("game_params: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("game_params." + key + ": wrong type");
    }
  }
  p.validate();
  return p;
}

inline nlohmann::json game_params_to_json(const GameParams& p) {
  return {
      {"endowment", p.endowment},
      {"public_goods_endowment", p.public_goods_endowment},
      {"trust_multiplier", p.trust_multiplier},
      {"trust_banker_investment", p.trust_banker_investment},
      {"public_goods_players", p.public_goods_players},
      {"public_goods_multiplier", p.public_goods_multiplier},
      {"bomb_boxes", p.bomb_boxes},
      {"pd_matrix", {p.pd.reward, p.pd.temptation, p.pd.punishment, p.pd.sucker}},
  };
}

} // namespace behavbench
