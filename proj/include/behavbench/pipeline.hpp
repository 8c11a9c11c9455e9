#pragma once

// The three stages driven by the command-line tool:
//   collect  - transcripts per (agent, game) and per-agent distributions
//   analyze  - Turing test, Wasserstein matrix, preference curves, logit fits,
//              inconsistency and histograms, written as CSV plus report.json
//   report   - a markdown summary rendered from report.json

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

#include "behavbench/agent.hpp"
#include "behavbench/analysis.hpp"
#include "behavbench/config.hpp"
#include "behavbench/connector.hpp"
#include "behavbench/distribution.hpp"
#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"
#include "behavbench/svg.hpp"
#include "behavbench/text.hpp"

namespace behavbench {

inline constexpr std::string_view kHumanPlayer = "human";
inline constexpr std::string_view kAnalysisDir = "analysis";
inline constexpr std::string_view kReportBundle = "report.json";
inline constexpr std::string_view kStatusFile = "status.json";

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

/// Built-in templates, used when the config names no prompts_dir.
inline std::string default_prompt_template(GameId g) {
  switch (g) {
  case GameId::Dictator:
    return "You have ${endowment} to split between yourself and an anonymous partner. "
           "Your partner must accept whatever you give. How many dollars, from $0 to "
           "${endowment}, do you give to your partner? State your decision as a dollar amount.";
  case GameId::UltimatumProposer:
    return "You have ${endowment} to split with an anonymous partner. You propose how much to "
           "give; if your partner accepts, the money is split as proposed, otherwise both of you "
           "get nothing. How many dollars, from $0 to ${endowment}, do you offer? State your "
           "decision as a dollar amount.";
  case GameId::UltimatumResponder:
    return "An anonymous partner has ${endowment} to split with you and will propose an offer. "
           "If you accept, the money is split as proposed; if you reject, both of you get "
           "nothing. What is the minimum offer, from $0 to ${endowment}, that you would accept? "
           "State your decision as a dollar amount.";
  case GameId::TrustInvestor:
    return "You have ${endowment}. Any amount you invest with an anonymous banker is multiplied "
           "by {multiplier}, and the banker then decides how much to return to you. How many "
           "dollars, from $0 to ${endowment}, do you invest? State your decision as a dollar amount.";
  case GameId::TrustBanker:
    return "An anonymous investor sent you ${investment}, which was multiplied by {multiplier}, "
           "so you now hold ${receipts}. How many dollars, from $0 to ${receipts}, do you return "
           "to the investor? State your decision as a dollar amount.";
  case GameId::PublicGoods:
    return "You and {other_players} other players each have ${endowment}. Contributions to a "
           "common pot are multiplied by {multiplier} and shared equally among all {players} "
           "players. How many dollars, from $0 to ${endowment}, do you contribute? State your "
           "decision as a dollar amount.";
  case GameId::BombRisk:
    return "There are {boxes} boxes. One hides a bomb; the rest each pay $1. You choose how many "
           "boxes to open. If none of them holds the bomb you keep $1 per box, otherwise you earn "
           "nothing. How many boxes, from 0 to {boxes}, do you open? State your decision as a "
           "number of boxes.";
  case GameId::PrisonersDilemma:
    return "You and an anonymous partner each choose to Cooperate or Defect. Both cooperate: "
           "${pd_reward} each. Both defect: ${pd_punishment} each. If one defects while the other "
           "cooperates, the defector gets ${pd_temptation} and the cooperator ${pd_sucker}. Do you "
           "choose to Cooperate or Defect?";
  }
  return {};
}

inline std::string prompt_template(const RunConfig& c, GameId g) {
  if (c.prompts_dir.empty()) return default_prompt_template(g);
  const auto path = c.prompts_dir / (std::string(to_string(g)) + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("prompt template " + path.string() + " not found");
  std::string text(std::istreambuf_iterator<char>(in), {});
  // Editors add a final newline; it is not part of the prompt.
  if (text.ends_with("\r\n")) text.resize(text.size() - 2);
  else if (text.ends_with('\n')) text.pop_back();
  return text;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

inline std::string provenance_line(const RunConfig& c) {
  return "# config_hash=" + config_hash(c) + " seed=" + std::to_string(c.seed) + "\n";
}

inline std::string r_tag(double r) { return "r" + format_number(r); }

inline std::filesystem::path transcript_path(const RunConfig& c, const std::string& agent, GameId g) {
  return c.session_dir / agent / (std::string(to_string(g)) + ".jsonl");
}

inline bool agent_needs_partner(const AgentProfile& p) {
  return p.kind == AgentKind::BestResponse || p.kind == AgentKind::SoftmaxLogit;
}

// ---------------------------------------------------------------------------
// collect
// ---------------------------------------------------------------------------

struct PairStatus {
  std::string agent;
  GameId game = GameId::Dictator;
  std::string state; // complete | skipped | partial | failed
  std::size_t valid = 0;
  std::size_t attempts = 0;
  std::string error;
};

struct CollectSummary {
  std::vector<PairStatus> pairs;
  bool complete() const {
    return std::all_of(pairs.begin(), pairs.end(),
                       [](const PairStatus& p) { return p.state == "complete" || p.state == "skipped"; });
  }
};

/// Collects every (agent, game) pair of the config.  Pairs that already hold
/// n_valid valid records are skipped, interrupted pairs continue where they
/// stopped, and a failing pair is recorded without aborting the others.
inline CollectSummary cmd_collect(const RunConfig& c, std::ostream& log) {
  validate_run_config(c);
  if (c.agents.empty()) throw ConfigError("config: no agents to collect");
  for (const auto& entry : c.agents)
    if (entry.endpoint) read_api_key(*entry.endpoint);
  std::filesystem::create_directories(c.session_dir);
  write_text_file(c.session_dir / "config.json",
                  nlohmann::json({{"config_hash", config_hash(c)}, {"config", run_config_to_json(c)}})
                          .dump(2) +
                      "\n");

  std::optional<HumanBaseline> baseline;
  auto need_baseline = [&]() -> const HumanBaseline& {
    if (!baseline) {
      if (c.baseline.empty()) throw ConfigError("config: baseline is required for utility agents");
      baseline = load_baseline(c.baseline, c.game_params);
    }
    return *baseline;
  };

  CollectSummary summary;
  for (const auto& entry : c.agents) {
    const auto& prof = entry.profile;
    GameDistributions dists;
    for (GameId g : c.games) {
      const GameSpec spec(g, c.game_params);
      PairStatus st{prof.agent_id, g, "complete", 0, 0, {}};
      const auto path = transcript_path(c, prof.agent_id, g);
      try {
        std::vector<CollectionRecord> existing;
        if (std::filesystem::exists(path)) existing = read_records(path);
        std::size_t valid = 0;
        std::uint64_t next_index = 0;
        for (const auto& r : existing) {
          if (r.valid()) ++valid;
          next_index = std::max(next_index, r.attempt_index + 1);
        }
        st.valid = valid;
        st.attempts = existing.size();
        if (valid >= c.n_valid) {
          st.state = "skipped";
          log << prof.agent_id << '/' << to_string(g) << ": already complete (" << valid
              << " valid)\n";
        } else {
          const std::string prompt = render_prompt(prompt_template(c, g), spec);
          CollectOptions opt;
          opt.agent_id = prof.agent_id;
          opt.n_valid = c.n_valid - valid;
          opt.first_attempt_index = next_index;
          std::unique_ptr<ChatClient> client;
          if (prof.kind == AgentKind::Remote) {
            const auto& ep = *entry.endpoint;
            client = std::make_unique<HttpChatClient>(ep);
            opt.max_in_flight = ep.max_in_flight;
            opt.retry_limit = ep.retry_limit;
            opt.retry_backoff_ms = ep.retry_backoff_ms;
          } else {
            AgentProfile seeded = prof;
            seeded.seed = fnv1a64(std::to_string(prof.seed) + ":" + std::string(to_string(g)) +
                                  ":" + std::to_string(next_index));
            std::optional<PartnerModel> partner;
            if (agent_needs_partner(prof) && g != GameId::BombRisk)
              partner = PartnerModel::from_baseline(spec, need_baseline());
            client = std::make_unique<ScriptedChatClient>(Agent(seeded), spec, partner);
            opt.max_in_flight = 1;
            opt.retry_limit = 1;
          }
          JsonlWriter writer(path);
          std::size_t written = 0;
          try {
            const auto recs = collect(*client, spec, prompt, opt, [&](const CollectionRecord& r) {
              writer.write(r);
              ++written;
            });
            st.valid = c.n_valid;
            st.attempts += recs.size();
            log << prof.agent_id << '/' << to_string(g) << ": " << c.n_valid << " valid of "
                << st.attempts << " attempts\n";
          } catch (const CollectionError& e) {
            std::size_t got = 0;
            for (const auto& r : e.records()) got += r.valid() ? 1 : 0;
            st.valid += got;
            st.attempts += written;
            st.state = st.valid > 0 ? "partial" : "failed";
            st.error = e.what();
          }
        }
      } catch (const Error& e) {
        st.state = "failed";
        st.error = e.what();
      }
      if (!st.error.empty())
        log << prof.agent_id << '/' << to_string(g) << ": " << st.state << ": " << st.error << '\n';
      if ((st.state == "complete" || st.state == "skipped")) {
        const auto records = read_records(path);
        // Keep the first n_valid valid records so that extra samples from
        // an earlier, larger run cannot skew the distribution.
        std::vector<CollectionRecord> used;
        std::size_t kept = 0;
        for (const auto& r : records) {
          if (r.valid() && kept == c.n_valid) continue;
          if (r.valid()) ++kept;
          used.push_back(r);
        }
        dists.emplace(g, from_records(spec, used));
      }
      summary.pairs.push_back(st);
    }
    if (!dists.empty())
      save_distributions(c.session_dir / prof.agent_id / kDistributionsFile, dists);
  }

  nlohmann::json status = nlohmann::json::array();
  for (const auto& p : summary.pairs)
    status.push_back({{"agent", p.agent},
                      {"game", std::string(to_string(p.game))},
                      {"state", p.state},
                      {"valid", p.valid},
                      {"attempts", p.attempts},
                      {"error", p.error}});
  write_text_file(c.session_dir / kStatusFile,
                  nlohmann::json({{"complete", summary.complete()}, {"pairs", status}}).dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeResult {
  std::filesystem::path out_dir;
  std::vector<std::string> warnings;
};

namespace detail {

inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline std::vector<GameId> ordered_games(std::vector<GameId> games) {
  std::sort(games.begin(), games.end(),
            [](GameId a, GameId b) { return game_index(a) < game_index(b); });
  return games;
}

} // namespace detail

/// Runs every analysis of a collected session against the human baseline.
inline AnalyzeResult cmd_analyze(const RunConfig& c, std::ostream& log) {
  validate_run_config(c);
  if (c.baseline.empty()) throw ConfigError("config: baseline is required for analysis");
  const HumanBaseline human = load_baseline(c.baseline, c.game_params);
  const SessionDistributions session = load_session(c.session_dir, c.game_params);
  if (session.empty())
    throw ValidationError("session " + c.session_dir.string() + " has no agent distributions");

  AnalyzeResult result;
  result.out_dir = c.session_dir / kAnalysisDir;
  auto warn = [&](const std::string& w) {
    result.warnings.push_back(w);
    log << "warning: " << w << '\n';
  };

  // Players: the human baseline first, then agents alphabetically (std::map order).
  std::vector<NamedDistributions> players;
  players.push_back({std::string(kHumanPlayer), human.games()});
  for (const auto& [agent, games] : session) players.push_back({agent, games});

  const auto games = detail::ordered_games(c.games);
  for (GameId g : games)
    if (!human.has(g)) throw MissingBaselineError("missing baseline for " + std::string(to_string(g)));
  for (const auto& p : players)
    for (const auto& [g, d] : p.games)
      if (!(d.spec().params() == c.game_params))
        throw ValidationError(p.name + "/" + std::string(to_string(g)) +
                              ": distribution was built with different game parameters");

  std::vector<GameId> common;
  for (GameId g : games) {
    bool everyone = true;
    for (const auto& p : players)
      if (!p.games.contains(g)) {
        everyone = false;
        warn(p.name + " has no " + std::string(to_string(g)) + " distribution");
      }
    if (everyone) common.push_back(g);
  }
  if (common.empty()) throw ValidationError("no game has distributions for every player");

  const std::string prov = provenance_line(c);
  nlohmann::json bundle = {
      {"config_hash", config_hash(c)},
      {"seed", c.seed},
      {"r_values", c.r_values},
      {"b_grid_step", c.b_grid_step},
  };
  {
    nlohmann::json gs = nlohmann::json::array();
    for (GameId g : common) gs.push_back(std::string(to_string(g)));
    bundle["games"] = gs;
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : players) ps.push_back(p.name);
    bundle["players"] = ps;
  }

  // Turing test.
  {
    std::ostringstream csv;
    csv << prov << "player,game,win_rate\n";
    nlohmann::json tj = nlohmann::json::object();
    for (const auto& p : players) {
      double sum = 0;
      nlohmann::json row = nlohmann::json::object();
      for (GameId g : common) {
        const auto res = turing_test(p.games.at(g), human.at(g));
        csv << p.name << ',' << to_string(g) << ',' << format_metric(res.win_rate) << '\n';
        row[std::string(to_string(g))] = res.win_rate;
        sum += res.win_rate;
      }
      const double overall = sum / static_cast<double>(common.size());
      csv << p.name << ",overall," << format_metric(overall) << '\n';
      row["overall"] = overall;
      tj[p.name] = row;
    }
    write_text_file(result.out_dir / "turing.csv", csv.str());
    bundle["turing"] = tj;
  }

  // Wasserstein dissimilarity matrix on normalised supports.
  {
    const auto m = dissimilarity_matrix(players, common);
    std::ostringstream csv;
    csv << prov << "player";
    for (const auto& n : m.names) csv << ',' << n;
    csv << '\n';
    for (std::size_t i = 0; i < m.names.size(); ++i) {
      csv << m.names[i];
      for (double v : m.values[i]) csv << ',' << format_metric(v);
      csv << '\n';
    }
    write_text_file(result.out_dir / "wasserstein.csv", csv.str());
    bundle["wasserstein"] = {{"names", m.names}, {"matrix", m.values}};
  }

  // Preference curves, logit fits, inconsistency.
  std::vector<GameId> pref_games;
  for (GameId g : common)
    if (has_partner_payoff(g)) pref_games.push_back(g);
  const auto grid = make_b_grid(c.b_grid_step);
  std::map<GameId, PartnerModel> partners;
  for (GameId g : pref_games)
    partners.emplace(g, PartnerModel::from_baseline(GameSpec(g, c.game_params), human));

  nlohmann::json curves_j = nlohmann::json::array();
  nlohmann::json fits_j = nlohmann::json::array();
  nlohmann::json incons_j = nlohmann::json::object();
  std::ostringstream fits_csv;
  fits_csv << prov << "player,game,r,b_hat,std_err,ci_lo,ci_hi,log_likelihood,n_samples\n";
  if (pref_games.size() < 2)
    warn("fewer than two games with a partner payoff; inconsistency omitted");

  for (double r : c.r_values) {
    std::ostringstream curve_csv;
    curve_csv << prov << "player,game,b,mse\n";
    std::ostringstream inc_csv;
    inc_csv << prov << "player,inconsistency\n";
    nlohmann::json inc_r = nlohmann::json::object();
    for (const auto& p : players) {
      std::vector<PreferenceCurve> curves;
      for (GameId g : pref_games) {
        const GameSpec spec(g, c.game_params);
        const auto& obs = p.games.at(g);
        const auto& partner = partners.at(g);
        curves.push_back(preference_curve(spec, obs, partner, r, grid));

        const auto fit = fit_logit_b(spec, obs, partner, r);
        fits_csv << p.name << ',' << to_string(g) << ',' << format_number(r) << ','
                 << format_metric(fit.b_hat) << ',' << format_metric(fit.std_err) << ','
                 << format_metric(fit.ci_lo) << ',' << format_metric(fit.ci_hi) << ','
                 << format_metric(fit.log_likelihood) << ',' << fit.n_samples << '\n';
        fits_j.push_back({{"player", p.name},
                          {"game", std::string(to_string(g))},
                          {"r", r},
                          {"b_hat", fit.b_hat},
                          {"std_err", detail::finite_or_null(fit.std_err)},
                          {"ci_lo", detail::finite_or_null(fit.ci_lo)},
                          {"ci_hi", detail::finite_or_null(fit.ci_hi)},
                          {"log_likelihood", fit.log_likelihood},
                          {"n_samples", fit.n_samples}});
      }
      if (curves.empty()) continue;
      auto emit = [&](const PreferenceCurve& cv, const std::string& game) {
        for (std::size_t i = 0; i < cv.b_grid.size(); ++i)
          curve_csv << p.name << ',' << game << ',' << format_number(cv.b_grid[i]) << ','
                    << format_metric(cv.mse[i]) << '\n';
        curves_j.push_back({{"player", p.name}, {"game", game}, {"r", r}, {"b", cv.b_grid}, {"mse", cv.mse}});
      };
      for (const auto& cv : curves) emit(cv, std::string(to_string(*cv.game)));
      emit(average_curves(curves), "average");
      if (curves.size() >= 2) {
        const double score = inconsistency_score(curves);
        inc_csv << p.name << ',' << format_metric(score) << '\n';
        inc_r[p.name] = score;
      }
    }
    write_text_file(result.out_dir / ("preference_curves_" + r_tag(r) + ".csv"), curve_csv.str());
    if (pref_games.size() >= 2) {
      write_text_file(result.out_dir / ("inconsistency_" + r_tag(r) + ".csv"), inc_csv.str());
      incons_j[format_number(r)] = inc_r;
    }
  }
  write_text_file(result.out_dir / "logit_fits.csv", fits_csv.str());
  bundle["preference_curves"] = curves_j;
  bundle["logit_fits"] = fits_j;
  bundle["inconsistency"] = incons_j;

  // Histograms.
  for (const auto& p : players)
    for (GameId g : games) {
      auto it = p.games.find(g);
      if (it == p.games.end()) continue;
      const auto base = result.out_dir / "histograms" / p.name / std::string(to_string(g));
      std::ostringstream csv;
      csv << prov;
      write_histogram_csv(csv, it->second);
      write_text_file(base.string() + ".csv", csv.str());
      if (c.svg)
        write_text_file(base.string() + ".svg",
                        histogram_svg(it->second, p.name + " - " + std::string(display_name(g)),
                                      prov.substr(2, prov.size() - 3)));
    }

  bundle["warnings"] = result.warnings;
  write_text_file(result.out_dir / kReportBundle, bundle.dump(2) + "\n");
  log << "analysis written to " << result.out_dir.string() << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

namespace detail {

inline std::string cell(const nlohmann::json& v) {
  if (v.is_number()) return format_fixed(v.get<double>(), 3);
  if (v.is_null()) return "-";
  return v.dump();
}

} // namespace detail

/// Markdown summary of an analysis bundle.  Rows are agents in alphabetical
/// order; the human baseline is quoted under each table.
inline std::string render_report(const nlohmann::json& bundle) {
  if (!bundle.is_object() || !bundle.contains("players") || !bundle.contains("games"))
    throw ValidationError("report bundle is malformed");
  std::vector<std::string> agents;
  for (const auto& p : bundle.at("players"))
    if (p.get<std::string>() != kHumanPlayer) agents.push_back(p.get<std::string>());
  std::sort(agents.begin(), agents.end());
  if (agents.empty()) throw ValidationError("report bundle contains no agents");

  std::vector<GameId> games;
  for (const auto& g : bundle.at("games")) games.push_back(parse_game_id(g.get<std::string>()));
  games = detail::ordered_games(games);
  const std::string human(kHumanPlayer);

  std::ostringstream md;
  md << "# Behavioural benchmark report\n\n";
  md << "config hash `" << bundle.value("config_hash", std::string{}) << "`, seed "
     << bundle.value("seed", std::uint64_t{0}) << "\n\n";

  // Turing test
  md << "## Turing test win rate\n\n| Agent |";
  for (GameId g : games) md << ' ' << display_name(g) << " |";
  md << " Overall |\n|---|";
  for (std::size_t i = 0; i <= games.size(); ++i) md << "---|";
  md << '\n';
  const auto& turing = bundle.at("turing");
  for (const auto& a : agents) {
    md << "| " << a << " |";
    for (GameId g : games) md << ' ' << detail::cell(turing.at(a).at(std::string(to_string(g)))) << " |";
    md << ' ' << detail::cell(turing.at(a).at("overall")) << " |\n";
  }
  md << "\nHuman baseline against itself: " << detail::cell(turing.at(human).at("overall")) << "\n\n";

  // Wasserstein
  const auto& w = bundle.at("wasserstein");
  const auto names = w.at("names").get<std::vector<std::string>>();
  auto idx = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  md << "## Distribution dissimilarity (mean normalised Wasserstein distance)\n\n| Agent | vs human |";
  for (const auto& a : agents) md << ' ' << a << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < agents.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& a : agents) {
    md << "| " << a << " | " << detail::cell(w.at("matrix").at(idx(a)).at(idx(human))) << " |";
    for (const auto& b : agents) md << ' ' << detail::cell(w.at("matrix").at(idx(a)).at(idx(b))) << " |";
    md << '\n';
  }
  md << '\n';

  // Logit fits
  const auto r_values = bundle.at("r_values").get<std::vector<double>>();
  std::vector<GameId> fit_games;
  for (GameId g : games)
    if (has_partner_payoff(g)) fit_games.push_back(g);
  auto find_fit = [&](const std::string& player, GameId g, double r) -> const nlohmann::json* {
    for (const auto& f : bundle.at("logit_fits"))
      if (f.at("player") == player && f.at("game") == to_string(g) && f.at("r").get<double>() == r)
        return &f;
    return nullptr;
  };
  for (double r : r_values) {
    if (fit_games.empty()) break;
    md << "## Estimated b, multinomial logit (r = " << format_number(r) << ")\n\n| Agent |";
    for (GameId g : fit_games) md << ' ' << display_name(g) << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < fit_games.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& player : agents) {
      md << "| " << player << " |";
      for (GameId g : fit_games) {
        const auto* f = find_fit(player, g, r);
        md << ' ' << (f ? detail::cell(f->at("b_hat")) + " (" + detail::cell(f->at("std_err")) + ")" : "-")
           << " |";
      }
      md << '\n';
    }
    md << "\nHuman baseline:";
    for (GameId g : fit_games) {
      const auto* f = find_fit(human, g, r);
      md << ' ' << to_string(g) << '=' << (f ? detail::cell(f->at("b_hat")) : "-");
    }
    md << "\n\n";
  }

  // Preference curves: b minimising the average MSE.
  auto best_b = [&](const std::string& player, double r) -> std::string {
    for (const auto& cv : bundle.at("preference_curves"))
      if (cv.at("player") == player && cv.at("game") == "average" && cv.at("r").get<double>() == r) {
        const auto b = cv.at("b").get<std::vector<double>>();
        const auto mse = cv.at("mse").get<std::vector<double>>();
        const auto k = static_cast<std::size_t>(std::min_element(mse.begin(), mse.end()) - mse.begin());
        return format_fixed(b[k], 2) + " (MSE " + format_fixed(mse[k], 3) + ")";
      }
    return "-";
  };
  md << "## Preference curves: b with the lowest average MSE\n\n| Agent |";
  for (double r : r_values) md << " r = " << format_number(r) << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < r_values.size(); ++i) md << "---|";
  md << '\n';
  for (const auto& a : agents) {
    md << "| " << a << " |";
    for (double r : r_values) md << ' ' << best_b(a, r) << " |";
    md << '\n';
  }
  md << "\nHuman baseline:";
  for (double r : r_values) md << " r=" << format_number(r) << ": " << best_b(human, r);
  md << "\n\n";

  // Inconsistency
  const auto& inc = bundle.at("inconsistency");
  md << "## Inconsistency across games\n\n";
  if (inc.empty()) {
    md << "Not computed (fewer than two games with a partner payoff).\n";
  } else {
    md << "| Agent |";
    for (double r : r_values) md << " r = " << format_number(r) << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < r_values.size(); ++i) md << "---|";
    md << '\n';
    auto value = [&](const std::string& player, double r) {
      const auto key = format_number(r);
      if (!inc.contains(key) || !inc.at(key).contains(player)) return std::string("-");
      return detail::cell(inc.at(key).at(player));
    };
    for (const auto& a : agents) {
      md << "| " << a << " |";
      for (double r : r_values) md << ' ' << value(a, r) << " |";
      md << '\n';
    }
    md << "\nHuman baseline:";
    for (double r : r_values) md << " r=" << format_number(r) << ": " << value(human, r);
    md << '\n';
  }

  if (bundle.contains("warnings") && !bundle.at("warnings").empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& wn : bundle.at("warnings")) md << "- " << wn.get<std::string>() << '\n';
  }
  return md.str();
}

/// Renders <session>/analysis/summary.md from the analysis bundle.
inline std::filesystem::path cmd_report(const RunConfig& c, std::ostream& log) {
  const auto dir = c.session_dir / kAnalysisDir;
  const auto bundle_path = dir / kReportBundle;
  if (!std::filesystem::exists(bundle_path))
    throw ValidationError("no analysis bundle at " + bundle_path.string() + "; run analyze first");
  const auto bundle = read_json_file(bundle_path);
  if (bundle.empty()) throw ValidationError("analysis bundle " + bundle_path.string() + " is empty");
  const auto out = dir / "summary.md";
  write_text_file(out, render_report(bundle));
  log << "report written to " << out.string() << '\n';
  return out;
}

} // namespace behavbench
