#pragma once

// Estimators over behaviour distributions: expected utility against a
// partner population, best-response MSE curves, multinomial-logit fits of the
// own-payoff weight b, the behavioural Turing test, Wasserstein dissimilarity
// and cross-game inconsistency.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "behavbench/distribution.hpp"
#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"
#include "behavbench/partner.hpp"
#include "behavbench/random.hpp"
#include "behavbench/utility.hpp"

namespace behavbench {

// ---------------------------------------------------------------------------
// Expected utility
// ---------------------------------------------------------------------------

inline void check_partner(const GameSpec& spec, const PartnerModel& partner) {
  if (!has_partner_payoff(spec.id()))
    throw ContractError("bomb_risk has no partner payoff; two-payoff utility is undefined");
  if (partner.game() != spec.id())
    throw ContractError("partner model for " + std::string(to_string(partner.game())) +
                        " used with " + std::string(to_string(spec.id())));
  if (needs_partner_action(spec.id()) == partner.trivial())
    throw ContractError(std::string(to_string(spec.id())) + ": partner model does not match game");
}

namespace detail {

inline double expected_utility_unchecked(const GameSpec& spec, Action action,
                                         const PartnerModel& partner, const UtilityParams& p) {
  if (partner.trivial()) {
    const auto pay = payoff(spec, action, std::nullopt);
    return ces_utility(pay.own, pay.partner, p);
  }
  double eu = 0;
  const auto& values = partner.values();
  const auto& probs = partner.probs();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto pay = payoff(spec, action, values[i]);
    eu += probs[i] * ces_utility(pay.own, pay.partner, p);
  }
  return eu;
}

} // namespace detail

/// Expected CES utility of one action when the partner's decision is drawn
/// from the partner model.
inline double expected_utility(const GameSpec& spec, Action action, const PartnerModel& partner,
                               const UtilityParams& p) {
  check_partner(spec, partner);
  p.validate();
  return detail::expected_utility_unchecked(spec, action, partner, p);
}

/// expected_utility for every action of the game, in action_space().values() order.
inline std::vector<double> action_utilities(const GameSpec& spec, const PartnerModel& partner,
                                            const UtilityParams& p) {
  check_partner(spec, partner);
  p.validate();
  const auto actions = spec.action_space().values();
  std::vector<double> eu(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i)
    eu[i] = detail::expected_utility_unchecked(spec, actions[i], partner, p);
  return eu;
}

/// Utilities divided by the best-response utility, so the best action scores 1.
inline std::vector<double> normalized_utilities(const GameSpec& spec, const PartnerModel& partner,
                                                const UtilityParams& p) {
  auto eu = action_utilities(spec, partner, p);
  const double best = *std::max_element(eu.begin(), eu.end());
  if (!(best > 0) || !std::isfinite(best))
    throw NumericalError(std::string(to_string(spec.id())) +
                         ": best-response utility is not positive");
  for (double& u : eu) u /= best;
  return eu;
}

/// Multiplier applied to normalised utilities inside the logit choice model.
inline constexpr double kLogitScale = 100.0;

/// log Pr(k) for every action under the logit choice law
/// Pr(k) = exp(s_k) / sum_j exp(s_j) with s_k = kLogitScale * normalised EU.
inline std::vector<double> logit_log_probs(const GameSpec& spec, const PartnerModel& partner,
                                           const UtilityParams& p) {
  auto s = normalized_utilities(spec, partner, p);
  for (double& v : s) v *= kLogitScale;
  const double top = *std::max_element(s.begin(), s.end());
  double z = 0;
  for (double v : s) z += std::exp(v - top);
  const double log_z = top + std::log(z);
  for (double& v : s) v -= log_z;
  return s;
}

inline std::vector<double> logit_probs(const GameSpec& spec, const PartnerModel& partner,
                                       const UtilityParams& p) {
  auto lp = logit_log_probs(spec, partner, p);
  for (double& v : lp) v = std::exp(v);
  return lp;
}

// ---------------------------------------------------------------------------
// Preference curves
// ---------------------------------------------------------------------------

struct PreferenceCurve {
  std::optional<GameId> game; // nullopt for the cross-game average
  std::vector<double> b_grid;
  std::vector<double> mse;
  double r = 1.0;
};

/// 0, step, 2 step, ..., 1.  Points are computed as i / n so that 1 is exact.
inline std::vector<double> make_b_grid(double step = 0.02) {
  if (!(step > 0) || step > 1) throw RangeError("b grid step must lie in (0, 1]");
  const auto n = static_cast<long>(std::llround(1.0 / step));
  if (n < 1 || std::abs(static_cast<double>(n) * step - 1.0) > 1e-9)
    throw RangeError("b grid step must divide 1");
  std::vector<double> grid;
  for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(n));
  return grid;
}

/// MSE(b) = sum_a observed(a) * (normalised EU_b(a) - 1)^2 for every b on the grid.
inline PreferenceCurve preference_curve(const GameSpec& spec, const ActionDistribution& observed,
                                        const PartnerModel& partner, double r,
                                        std::span<const double> b_grid) {
  if (observed.game() != spec.id())
    throw ContractError("preference_curve: observed distribution is for another game");
  if (b_grid.empty()) throw RangeError("preference_curve: empty b grid");
  for (std::size_t i = 0; i < b_grid.size(); ++i) {
    if (!(b_grid[i] >= 0 && b_grid[i] <= 1)) throw RangeError("preference_curve: b outside [0, 1]");
    if (i > 0 && !(b_grid[i] > b_grid[i - 1]))
      throw RangeError("preference_curve: b grid must be ascending");
  }
  const auto space = spec.action_space();
  PreferenceCurve curve{spec.id(), {b_grid.begin(), b_grid.end()}, {}, r};
  for (double b : b_grid) {
    const auto u = normalized_utilities(spec, partner, UtilityParams{b, r});
    double mse = 0;
    for (std::size_t i = 0; i < observed.support().size(); ++i) {
      const double gap = u[space.index_of(observed.support()[i])] - 1.0;
      mse += observed.probs()[i] * gap * gap;
    }
    curve.mse.push_back(mse);
  }
  return curve;
}

inline void check_same_grid(std::span<const PreferenceCurve> curves) {
  for (const auto& c : curves) {
    if (c.mse.size() != c.b_grid.size())
      throw ContractError("preference curve: grid and values differ in length");
    if (c.b_grid != curves.front().b_grid || c.r != curves.front().r)
      throw ContractError("preference curves use different b grids or r");
  }
}

/// Unweighted mean of per-game curves on a shared grid.
inline PreferenceCurve average_curves(std::span<const PreferenceCurve> curves) {
  if (curves.empty()) throw ContractError("average_curves: no curves");
  check_same_grid(curves);
  PreferenceCurve avg{std::nullopt, curves.front().b_grid,
                      std::vector<double>(curves.front().b_grid.size(), 0.0), curves.front().r};
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.mse.size(); ++i) avg.mse[i] += c.mse[i];
  for (double& v : avg.mse) v /= static_cast<double>(curves.size());
  return avg;
}

/// Mean over games and grid points of |MSE_g(b) - mean_g MSE_g(b)|.
inline double inconsistency_score(std::span<const PreferenceCurve> curves) {
  if (curves.size() < 2) throw ContractError("inconsistency_score: needs at least two games");
  const auto avg = average_curves(curves);
  long double total = 0;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.mse.size(); ++i) total += std::abs(c.mse[i] - avg.mse[i]);
  return static_cast<double>(total / static_cast<long double>(curves.size() * avg.mse.size()));
}

// ---------------------------------------------------------------------------
// Multinomial logit estimate of b
// ---------------------------------------------------------------------------

struct LogitFit {
  GameId game = GameId::Dictator;
  double b_hat = 0;
  double std_err = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  double r = 1.0;
  double log_likelihood = 0;
  std::uint64_t n_samples = 0;
};

/// sum_k n_k log Pr(k | b) for the observed counts.
inline double logit_log_likelihood(const GameSpec& spec, const ActionDistribution& observed,
                                   const PartnerModel& partner, double b, double r) {
  const auto lp = logit_log_probs(spec, partner, UtilityParams{b, r});
  const auto space = spec.action_space();
  const double n = static_cast<double>(observed.n_samples());
  double ll = 0;
  for (std::size_t i = 0; i < observed.support().size(); ++i)
    ll += observed.probs()[i] * n * lp[space.index_of(observed.support()[i])];
  if (!std::isfinite(ll)) throw NumericalError("logit log-likelihood is not finite");
  return ll;
}

struct LogitFitOptions {
  int coarse_points = 101;     // initial scan of [0, 1]
  double tolerance = 1e-5;     // golden-section bracket width
  double hessian_step = 1e-3;  // finite-difference step for the standard error
};

/// Maximum-likelihood b in [0, 1] under the logit choice model, with a
/// finite-difference standard error and an unclipped 95% interval.
///
/// A coarse scan picks the best grid cell; golden-section search refines it.
/// At the ends of [0, 1] the second derivative uses a one-sided stencil.
inline LogitFit fit_logit_b(const GameSpec& spec, const ActionDistribution& observed,
                            const PartnerModel& partner, double r,
                            const LogitFitOptions& opt = {}) {
  if (observed.game() != spec.id())
    throw ContractError("fit_logit_b: observed distribution is for another game");
  if (observed.n_samples() == 0) throw ValidationError("fit_logit_b: empty observation set");
  check_partner(spec, partner);

  auto ll = [&](double b) { return logit_log_likelihood(spec, observed, partner, b, r); };

  const int m = std::max(opt.coarse_points, 3);
  std::vector<double> grid(static_cast<std::size_t>(m));
  std::vector<double> vals(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(m - 1);
    vals[i] = ll(grid[i]);
    if (vals[i] > vals[best]) best = i;
  }

  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = ll(x1);
  double f2 = ll(x2);
  while (hi - lo > opt.tolerance) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = ll(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = ll(x1);
    }
  }
  double b_hat = (lo + hi) / 2;
  double ll_hat = ll(b_hat);
  // The maximum may sit on a bracket end (e.g. b = 1 for a selfish player).
  for (double cand : {grid[best], lo, hi}) {
    const double v = ll(cand);
    if (v > ll_hat) {
      b_hat = cand;
      ll_hat = v;
    }
  }

  const double h = opt.hessian_step;
  double second = 0;
  if (b_hat - h >= 0 && b_hat + h <= 1)
    second = (ll(b_hat + h) - 2 * ll_hat + ll(b_hat - h)) / (h * h);
  else if (b_hat + h > 1)
    second = (ll_hat - 2 * ll(b_hat - h) + ll(b_hat - 2 * h)) / (h * h);
  else
    second = (ll(b_hat + 2 * h) - 2 * ll(b_hat + h) + ll_hat) / (h * h);

  LogitFit fit;
  fit.game = spec.id();
  fit.b_hat = b_hat;
  fit.r = r;
  fit.log_likelihood = ll_hat;
  fit.n_samples = observed.n_samples();
  fit.std_err = second < 0 ? 1.0 / std::sqrt(-second) : std::numeric_limits<double>::infinity();
  fit.ci_lo = b_hat - 1.96 * fit.std_err;
  fit.ci_hi = b_hat + 1.96 * fit.std_err;
  return fit;
}

// ---------------------------------------------------------------------------
// Behavioural Turing test
// ---------------------------------------------------------------------------

enum class TuringMode { Exact, MonteCarlo };

struct TuringResult {
  GameId game = GameId::Dictator;
  double win_rate = 0;
  TuringMode mode = TuringMode::Exact;
  std::uint64_t n_rounds = 0; // MonteCarlo only
  double std_err = 0;         // MonteCarlo only
};

struct TuringOptions {
  TuringMode mode = TuringMode::Exact;
  std::uint64_t n_rounds = 100000;
  std::uint64_t seed = 0;
};

namespace detail {
inline double turing_score(double h_ai, double h_human) {
  if (h_ai > h_human) return 1.0;
  if (h_ai == h_human) return 0.5;
  return 0.0;
}
} // namespace detail

/// Probability that an AI action beats an independent human action, where the
/// action that is more probable under the human distribution wins and ties
/// score one half.
inline TuringResult turing_test(const ActionDistribution& ai, const ActionDistribution& human,
                                const TuringOptions& opt = {}) {
  if (ai.game() != human.game())
    throw ContractError("turing_test: distributions are for different games");
  TuringResult res;
  res.game = ai.game();
  res.mode = opt.mode;

  std::vector<double> ai_h(ai.support().size());
  for (std::size_t i = 0; i < ai_h.size(); ++i) ai_h[i] = human.prob(ai.support()[i]);
  const auto& hp = human.probs();

  if (opt.mode == TuringMode::Exact) {
    double win = 0;
    for (std::size_t i = 0; i < ai_h.size(); ++i) {
      double row = 0;
      for (double h : hp) row += h * detail::turing_score(ai_h[i], h);
      win += ai.probs()[i] * row;
    }
    res.win_rate = std::clamp(win, 0.0, 1.0);
    return res;
  }

  if (opt.n_rounds < 2) throw RangeError("turing_test: Monte Carlo needs at least 2 rounds");
  Rng rng(opt.seed);
  const auto ai_cdf = cumulative(ai.probs());
  const auto human_cdf = cumulative(hp);
  double sum = 0;
  double sum_sq = 0;
  for (std::uint64_t k = 0; k < opt.n_rounds; ++k) {
    const std::size_t a = sample_from_cdf(ai_cdf, rng);
    const std::size_t h = sample_from_cdf(human_cdf, rng);
    const double s = detail::turing_score(ai_h[a], hp[h]);
    sum += s;
    sum_sq += s * s;
  }
  const double n = static_cast<double>(opt.n_rounds);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
  res.win_rate = mean;
  res.n_rounds = opt.n_rounds;
  res.std_err = std::sqrt(var / n);
  return res;
}

// ---------------------------------------------------------------------------
// Wasserstein distance
// ---------------------------------------------------------------------------

/// Exact W1 between two discrete distributions on the real line:
/// the integral of |CDF_a - CDF_b| over the merged breakpoints.
inline double wasserstein_1d(const PointDistribution& a, const PointDistribution& b) {
  if (a.points.size() != a.probs.size() || b.points.size() != b.probs.size())
    throw ContractError("wasserstein_1d: points and probs differ in length");
  if (a.points.empty() || b.points.empty()) throw ContractError("wasserstein_1d: empty distribution");
  std::size_t i = 0, j = 0;
  double cdf_a = 0, cdf_b = 0, dist = 0;
  double x = std::min(a.points.front(), b.points.front());
  while (i < a.points.size() || j < b.points.size()) {
    const double xa = i < a.points.size() ? a.points[i] : std::numeric_limits<double>::infinity();
    const double xb = j < b.points.size() ? b.points[j] : std::numeric_limits<double>::infinity();
    const double next = std::min(xa, xb);
    dist += std::abs(cdf_a - cdf_b) * (next - x);
    x = next;
    while (i < a.points.size() && a.points[i] == x) cdf_a += a.probs[i++];
    while (j < b.points.size() && b.points[j] == x) cdf_b += b.probs[j++];
  }
  return dist;
}

/// W1 on the raw numeric embedding of two distributions of the same game.
inline double wasserstein_1d(const ActionDistribution& a, const ActionDistribution& b) {
  if (a.game() != b.game()) throw ContractError("wasserstein_1d: distributions are for different games");
  return wasserstein_1d(embed(a), embed(b));
}

/// W1 after mapping both action spaces onto [0, 1].
inline double normalized_wasserstein(const ActionDistribution& a, const ActionDistribution& b) {
  if (a.game() != b.game()) throw ContractError("wasserstein_1d: distributions are for different games");
  return wasserstein_1d(normalize_support(a), normalize_support(b));
}

struct NamedDistributions {
  std::string name;
  GameDistributions games;
};

struct DissimilarityMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};

/// Entry (i, j) is the mean over `games` of the normalised W1 between
/// players i and j.
inline DissimilarityMatrix dissimilarity_matrix(std::span<const NamedDistributions> players,
                                                std::span<const GameId> games = kAllGames) {
  if (games.empty()) throw ContractError("dissimilarity_matrix: no games");
  for (const auto& p : players)
    for (GameId g : games)
      if (!p.games.contains(g))
        throw ValidationError("dissimilarity_matrix: " + p.name + " has no " +
                              std::string(to_string(g)) + " distribution");
  DissimilarityMatrix m;
  const std::size_t n = players.size();
  m.values.assign(n, std::vector<double>(n, 0.0));
  for (const auto& p : players) m.names.push_back(p.name);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double sum = 0;
      for (GameId g : games)
        sum += normalized_wasserstein(players[i].games.at(g), players[j].games.at(g));
      m.values[i][j] = m.values[j][i] = sum / static_cast<double>(games.size());
    }
  return m;
}

} // namespace behavbench
