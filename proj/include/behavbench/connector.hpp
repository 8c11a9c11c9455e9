#pragma once

// Collection of behaviour samples from chat-completion endpoints.
//
// Every sample is an independent single-turn conversation carrying only the
// rendered prompt.  Replies are appended to the record sink (raw text first,
// parsed action alongside) before the loop decides whether to retry.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "behavbench/agent.hpp"
#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"
#include "behavbench/record.hpp"
#include "behavbench/text.hpp"

namespace behavbench {

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

/// Value of a template placeholder for a game, or nullopt if unknown.
///
/// {multiplier} is the trust multiplier in trust games and the public goods
/// multiplier in the public goods game.
inline std::optional<std::string> placeholder_value(std::string_view name, const GameSpec& spec) {
  const GameParams& p = spec.params();
  const auto space = spec.action_space();
  if (name == "endowment")
    return std::to_string(spec.id() == GameId::PublicGoods ? p.public_goods_endowment : p.endowment);
  if (name == "public_goods_endowment") return std::to_string(p.public_goods_endowment);
  if (name == "multiplier")
    return format_number(spec.id() == GameId::PublicGoods ? p.public_goods_multiplier
                                                          : p.trust_multiplier);
  if (name == "trust_multiplier") return format_number(p.trust_multiplier);
  if (name == "investment") return std::to_string(p.trust_banker_investment);
  if (name == "receipts") return std::to_string(p.trust_banker_receipts());
  if (name == "players") return std::to_string(p.public_goods_players);
  if (name == "other_players") return std::to_string(p.public_goods_players - 1);
  if (name == "public_goods_multiplier") return format_number(p.public_goods_multiplier);
  if (name == "mpcr") return format_number(p.public_goods_multiplier / p.public_goods_players);
  if (name == "boxes") return std::to_string(p.bomb_boxes);
  if (name == "pd_reward") return format_number(p.pd.reward);
  if (name == "pd_temptation") return format_number(p.pd.temptation);
  if (name == "pd_punishment") return format_number(p.pd.punishment);
  if (name == "pd_sucker") return format_number(p.pd.sucker);
  if (name == "min_action") return space.label(space.lo());
  if (name == "max_action") return space.label(space.hi());
  if (name == "game") return std::string(to_string(spec.id()));
  if (name == "game_name") return std::string(display_name(spec.id()));
  return std::nullopt;
}

/// Substitutes {name} placeholders; "{{" and "}}" produce literal braces.
inline std::string render_prompt(std::string_view tmpl, const GameSpec& spec) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (c == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close == std::string_view::npos)
        throw ValidationError("prompt template: unterminated placeholder");
      const auto name = tmpl.substr(i + 1, close - i - 1);
      auto value = placeholder_value(name, spec);
      if (!value)
        throw ValidationError("prompt template: unknown placeholder {" + std::string(name) + "}");
      out += *value;
      i = close;
    } else if (c == '}') {
      throw ValidationError("prompt template: unmatched '}'");
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string prompt_hash(std::string_view prompt) { return hex64(fnv1a64(prompt)); }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char full[40];
  std::snprintf(full, sizeof full, "%s.%03dZ", buf, static_cast<int>(ms));
  return full;
}

// ---------------------------------------------------------------------------
// Chat clients
// ---------------------------------------------------------------------------

struct EndpointConfig {
  std::string base_url;              // e.g. https://api.openai.com/v1
  std::string model_name;
  std::string api_key_env;           // empty: no Authorization header
  std::optional<double> temperature; // unset: provider default
  int max_in_flight = 4;
  double per_request_timeout_s = 60;
  int retry_limit = 5;
  int retry_backoff_ms = 250;

  void validate() const {
    if (base_url.empty()) throw ConfigError("endpoint: base_url is required");
    if (model_name.empty()) throw ConfigError("endpoint: model is required");
    if (max_in_flight < 1) throw ConfigError("endpoint: max_in_flight must be at least 1");
    if (retry_limit < 1) throw ConfigError("endpoint: retry_limit must be at least 1");
    if (!(per_request_timeout_s > 0)) throw ConfigError("endpoint: timeout must be positive");
  }
};

/// Reads the API key named by the endpoint; ConfigError names the variable
/// when it is unset.
inline std::string read_api_key(const EndpointConfig& ep) {
  if (ep.api_key_env.empty()) return {};
  const char* v = std::getenv(ep.api_key_env.c_str());
  if (v == nullptr || *v == '\0')
    throw ConfigError("environment variable " + ep.api_key_env + " (API key for " +
                      ep.model_name + ") is not set");
  return v;
}

/// One single-turn completion per call.  Implementations must be safe to
/// call from several threads at once.
class ChatClient {
public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct ParsedUrl {
  std::string scheme_host_port; // "https://host:port"
  std::string path_prefix;      // "/v1" or ""
};

inline ParsedUrl parse_base_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos)
    throw ConfigError("endpoint: base_url '" + std::string(url) + "' lacks a scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("endpoint: unsupported scheme '" + std::string(scheme) + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) out.path_prefix = std::string(url.substr(path_start));
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

/// Request body of the chat-completion wire protocol.
inline nlohmann::json chat_request_body(const EndpointConfig& ep, const std::string& prompt) {
  nlohmann::json body = {
      {"model", ep.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
  };
  if (ep.temperature) body["temperature"] = *ep.temperature;
  return body;
}

/// Assistant text from a chat-completion response body.
inline std::string chat_response_text(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw NetworkError(std::string("malformed chat-completion response: ") + e.what());
  }
}

/// JSON-over-HTTP chat-completion client (POST <base_url>/chat/completions).
class HttpChatClient : public ChatClient {
public:
  explicit HttpChatClient(EndpointConfig ep)
      : ep_(std::move(ep)), url_(parse_base_url(ep_.base_url)), key_(read_api_key(ep_)) {
    ep_.validate();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url_.scheme_host_port.starts_with("https"))
      throw ConfigError("endpoint: https requested but built without TLS support");
#endif
  }

  std::string complete(const std::string& prompt) override {
    // A fresh client per call keeps the method thread-safe.
    httplib::Client cli(url_.scheme_host_port);
    const auto secs = static_cast<time_t>(ep_.per_request_timeout_s);
    const auto usecs = static_cast<time_t>((ep_.per_request_timeout_s - secs) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
    const auto res = cli.Post(url_.path_prefix + "/chat/completions", headers,
                              chat_request_body(ep_, prompt).dump(), "application/json");
    if (!res)
      throw NetworkError("request to " + ep_.base_url + " failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
      throw AuthError("endpoint " + ep_.base_url + " rejected credentials (HTTP " +
                      std::to_string(res->status) + ")");
    if (res->status != 200)
      throw NetworkError("endpoint " + ep_.base_url + " returned HTTP " + std::to_string(res->status));
    return chat_response_text(res->body);
  }

private:
  EndpointConfig ep_;
  ParsedUrl url_;
  std::string key_;
};

/// Serves a scripted agent through the ChatClient interface.  Calls are
/// serialised so the agent's RNG stays single-threaded.
class ScriptedChatClient : public ChatClient {
public:
  ScriptedChatClient(Agent agent, GameSpec spec, std::optional<PartnerModel> partner)
      : agent_(std::move(agent)), spec_(std::move(spec)), partner_(std::move(partner)) {}

  std::string complete(const std::string&) override {
    std::lock_guard lock(mu_);
    const Action a = partner_ ? agent_.decide(spec_, *partner_) : agent_.decide(spec_);
    return reply_text(spec_, a);
  }

private:
  std::mutex mu_;
  Agent agent_;
  GameSpec spec_;
  std::optional<PartnerModel> partner_;
};

// ---------------------------------------------------------------------------
// Collection loop
// ---------------------------------------------------------------------------

/// Collection stopped before n_valid samples; records() holds what was gathered.
class CollectionError : public Error {
public:
  enum class Kind { Network, Auth, RetryExhausted, ParserStarvation };

  CollectionError(Kind kind, const std::string& what, std::vector<CollectionRecord> records)
      : Error(what), kind_(kind), records_(std::move(records)) {}

  Kind kind() const { return kind_; }
  const std::vector<CollectionRecord>& records() const { return records_; }

private:
  Kind kind_;
  std::vector<CollectionRecord> records_;
};

struct CollectOptions {
  std::string agent_id;
  std::size_t n_valid = 50;
  int max_in_flight = 4;
  int retry_limit = 5;
  int retry_backoff_ms = 250;
  std::uint64_t first_attempt_index = 0; // continue numbering when resuming
};

using RecordSink = std::function<void(const CollectionRecord&)>;

/// Requests replies until `n_valid` parse to a valid action.
///
/// Up to max_in_flight requests run at once; each valid sample gets at most
/// retry_limit attempts.  Records reach `sink` one at a time, in attempt order.
inline std::vector<CollectionRecord> collect(ChatClient& client, const GameSpec& spec,
                                             const std::string& prompt, const CollectOptions& opt,
                                             const RecordSink& sink = {}) {
  if (opt.max_in_flight < 1 || opt.retry_limit < 1)
    throw ContractError("collect: max_in_flight and retry_limit must be at least 1");
  const std::string hash = prompt_hash(prompt);
  const std::string where = opt.agent_id + "/" + std::string(to_string(spec.id()));

  std::mutex mu;
  std::vector<CollectionRecord> records;
  std::uint64_t next_attempt = opt.first_attempt_index;
  std::atomic<std::size_t> next_slot{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;

  auto fail = [&](std::exception_ptr e) {
    std::lock_guard lock(mu);
    if (!failure) failure = e;
    stop = true;
  };

  auto worker = [&] {
    while (!stop) {
      const std::size_t slot = next_slot++;
      if (slot >= opt.n_valid) return;
      int invalid = 0;
      bool done = false;
      std::string last_network_error;
      for (int attempt = 1; attempt <= opt.retry_limit && !stop; ++attempt) {
        std::string reply;
        try {
          reply = client.complete(prompt);
        } catch (const AuthError& e) {
          fail(std::make_exception_ptr(CollectionError(
              CollectionError::Kind::Auth, where + ": " + e.what(), {})));
          return;
        } catch (const NetworkError& e) {
          last_network_error = e.what();
          if (attempt < opt.retry_limit && opt.retry_backoff_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(opt.retry_backoff_ms * attempt));
          continue;
        } catch (...) {
          fail(std::current_exception());
          return;
        }
        CollectionRecord rec;
        rec.agent_id = opt.agent_id;
        rec.game = spec.id();
        rec.raw_reply = std::move(reply);
        rec.timestamp = utc_timestamp();
        rec.prompt_hash = hash;
        rec.parsed = parse_action(rec.raw_reply, spec);
        {
          std::lock_guard lock(mu);
          rec.attempt_index = next_attempt++;
          try {
            if (sink) sink(rec);
          } catch (...) {
            if (!failure) failure = std::current_exception();
            stop = true;
            return;
          }
          records.push_back(rec);
        }
        if (rec.valid()) {
          done = true;
          break;
        }
        ++invalid;
      }
      if (!done && !stop) {
        const auto context = where + ": sample " + std::to_string(slot + 1) + " of " +
                             std::to_string(opt.n_valid) + " failed after " +
                             std::to_string(opt.retry_limit) + " attempts";
        CollectionError::Kind kind = CollectionError::Kind::RetryExhausted;
        std::string detail;
        if (invalid == opt.retry_limit) {
          kind = CollectionError::Kind::ParserStarvation;
          detail = " (every reply was invalid)";
        } else if (invalid == 0) {
          kind = CollectionError::Kind::Network;
          detail = " (" + last_network_error + ")";
        }
        fail(std::make_exception_ptr(CollectionError(kind, context + detail, {})));
        return;
      }
    }
  };

  const int n_threads =
      static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(opt.max_in_flight),
                                             std::max<std::size_t>(opt.n_valid, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const CollectionError& e) {
      throw CollectionError(e.kind(), e.what(), std::move(records));
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// JSON-lines transcripts
// ---------------------------------------------------------------------------

/// Drops a partially written final line left by an interrupted run.
inline void repair_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return;
  std::string text;
  {
    std::ifstream in(path, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  if (text.empty() || text.back() == '\n') return;
  const auto last_nl = text.rfind('\n');
  text.resize(last_nl == std::string::npos ? 0 : last_nl + 1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::vector<CollectionRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open transcript " + path.string());
  std::vector<CollectionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error&) {
      // An interrupted write leaves a truncated last line; anything else is corruption.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed record");
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Append-only writer; each record is flushed as soon as it is written.
class JsonlWriter {
public:
  explicit JsonlWriter(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    repair_jsonl(path);
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw ValidationError("cannot write transcript " + path.string());
  }

  void write(const CollectionRecord& r) {
    out_ << record_to_json(r).dump() << '\n';
    out_.flush();
  }

private:
  std::ofstream out_;
};

} // namespace behavbench
