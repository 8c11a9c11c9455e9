#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "behavbench/distribution.hpp"
#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"

namespace behavbench {

/// Distribution over the partner's decision variable for one game role.
///
/// The variable is the one payoff() takes as `partner`: the responder's
/// minimum, the proposer's offer, the banker's return fraction, the sum of
/// the other players' contributions, or the partner's move.  Dictator and
/// Trust banker have no partner decision and use the trivial model.
class PartnerModel {
public:
  /// Model for a role whose payoff has no partner decision.
  static PartnerModel none(const GameSpec& spec) {
    if (needs_partner_action(spec.id()))
      throw ContractError(std::string(to_string(spec.id())) + ": needs a partner distribution");
    return PartnerModel(spec.id(), {}, {});
  }

  static PartnerModel discrete(const GameSpec& spec, std::vector<double> values,
                               std::vector<double> probs) {
    if (!needs_partner_action(spec.id()))
      throw ContractError(std::string(to_string(spec.id())) + ": takes no partner decision");
    if (values.empty() || values.size() != probs.size())
      throw ValidationError("partner model: values and probs must be non-empty and equal length");
    const auto [lo, hi] = spec.partner_range();
    double sum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]) || values[i] < lo || values[i] > hi)
        throw ValidationError("partner model: value " + format_number(values[i]) +
                              " outside [" + format_number(lo) + ", " + format_number(hi) + "]");
      if (!std::isfinite(probs[i]) || probs[i] < 0)
        throw ValidationError("partner model: negative probability");
      sum += probs[i];
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance)
      throw ValidationError("partner model: probabilities sum to " + format_number(sum));
    return PartnerModel(spec.id(), std::move(values), std::move(probs));
  }

  static PartnerModel point(const GameSpec& spec, double value) {
    return discrete(spec, {value}, {1.0});
  }

  /// Public goods partner: N - 1 independent draws from a per-player
  /// contribution distribution.  The distribution of their sum is computed
  /// exactly by repeated convolution.
  static PartnerModel public_goods_others(const GameSpec& spec,
                                          const ActionDistribution& per_player) {
    if (spec.id() != GameId::PublicGoods || per_player.game() != GameId::PublicGoods)
      throw ContractError("public_goods_others: public goods distributions only");
    const auto single = per_player.dense();
    std::vector<double> total{1.0};
    for (int k = 1; k < spec.params().public_goods_players; ++k) {
      std::vector<double> next(total.size() + single.size() - 1, 0.0);
      for (std::size_t i = 0; i < total.size(); ++i)
        if (total[i] != 0)
          for (std::size_t j = 0; j < single.size(); ++j) next[i + j] += total[i] * single[j];
      total = std::move(next);
    }
    std::vector<double> values, probs;
    double sum = 0;
    for (std::size_t s = 0; s < total.size(); ++s)
      if (total[s] > 0) {
        values.push_back(static_cast<double>(s));
        probs.push_back(total[s]);
        sum += total[s];
      }
    for (double& p : probs) p /= sum;
    return discrete(spec, std::move(values), std::move(probs));
  }

  /// Partner drawn from the human population of the opposite role.
  static PartnerModel from_baseline(const GameSpec& spec, const HumanBaseline& human) {
    switch (spec.id()) {
    case GameId::Dictator:
    case GameId::TrustBanker: return none(spec);
    case GameId::UltimatumProposer:
      return from_actions(spec, human.at(GameId::UltimatumResponder), 1.0);
    case GameId::UltimatumResponder:
      return from_actions(spec, human.at(GameId::UltimatumProposer), 1.0);
    case GameId::TrustInvestor: {
      const auto& banker = human.at(GameId::TrustBanker);
      const int receipts = banker.spec().params().trust_banker_receipts();
      if (receipts <= 0) throw ValidationError("trust banker baseline has an empty range");
      return from_actions(spec, banker, 1.0 / receipts);
    }
    case GameId::PublicGoods: return public_goods_others(spec, human.at(GameId::PublicGoods));
    case GameId::PrisonersDilemma:
      return from_actions(spec, human.at(GameId::PrisonersDilemma), 1.0);
    case GameId::BombRisk: break;
    }
    throw ContractError("bomb_risk has no partner");
  }

  GameId game() const { return game_; }
  bool trivial() const { return values_.empty(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }

private:
  PartnerModel(GameId g, std::vector<double> values, std::vector<double> probs)
      : game_(g), values_(std::move(values)), probs_(std::move(probs)) {}

  static PartnerModel from_actions(const GameSpec& spec, const ActionDistribution& d,
                                   double scale) {
    std::vector<double> values;
    for (Action a : d.support()) values.push_back(static_cast<double>(a) * scale);
    return discrete(spec, std::move(values), d.probs());
  }

  GameId game_;
  std::vector<double> values_;
  std::vector<double> probs_;
};

} // namespace behavbench
