#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "behavbench/errors.hpp"
#include "behavbench/game.hpp"

namespace behavbench {

/// One raw agent reply and the action parsed from it (nullopt = invalid).
struct CollectionRecord {
  std::string agent_id;
  GameId game = GameId::Dictator;
  std::uint64_t attempt_index = 0;
  std::string raw_reply;
  std::optional<Action> parsed;
  std::string timestamp;
  std::string prompt_hash;

  bool valid() const { return parsed.has_value(); }
  friend bool operator==(const CollectionRecord&, const CollectionRecord&) = default;
};

inline nlohmann::json record_to_json(const CollectionRecord& r) {
  nlohmann::json j = {
      {"agent_id", r.agent_id},
      {"game_id", std::string(to_string(r.game))},
      {"attempt_index", r.attempt_index},
      {"raw_reply", r.raw_reply},
      {"parsed", nullptr},
      {"timestamp", r.timestamp},
      {"prompt_hash", r.prompt_hash},
  };
  if (r.parsed) j["parsed"] = *r.parsed;
  return j;
}

inline CollectionRecord record_from_json(const nlohmann::json& j) {
  try {
    CollectionRecord r;
    r.agent_id = j.at("agent_id").get<std::string>();
    r.game = parse_game_id(j.at("game_id").get<std::string>());
    r.attempt_index = j.at("attempt_index").get<std::uint64_t>();
    r.raw_reply = j.at("raw_reply").get<std::string>();
    if (const auto& p = j.at("parsed"); !p.is_null()) r.parsed = p.get<Action>();
    r.timestamp = j.value("timestamp", std::string{});
    r.prompt_hash = j.value("prompt_hash", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("collection record: ") + e.what());
  }
}

} // namespace behavbench
