#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "behavbench/distribution.hpp"
#include "behavbench/random.hpp"

namespace behavbench::testing {

inline std::filesystem::path data_dir() { return BEHAVBENCH_DATA_DIR; }

inline HumanBaseline synthetic_baseline() {
  return load_baseline(data_dir() / "synthetic_baseline.json");
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("behavbench_" + name + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random distribution over a random subset of the game's actions.
inline ActionDistribution random_distribution(const GameSpec& spec, Rng& rng,
                                              std::size_t max_support = 12) {
  const auto actions = spec.action_space().values();
  const std::size_t k = 1 + uniform_index(rng, std::min(max_support, actions.size()));
  std::map<Action, std::uint64_t> counts;
  for (std::size_t i = 0; i < k; ++i)
    counts[actions[uniform_index(rng, actions.size())]] += 1 + uniform_index(rng, 20);
  return ActionDistribution::from_counts(spec, counts);
}

/// Local chat-completion server.  `reply` maps the request counter to the
/// assistant text; returning an empty optional answers with HTTP 500.
class MockChatServer {
public:
  using ReplyFn = std::function<std::string(int)>;

  explicit MockChatServer(ReplyFn reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = requests_++;
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
      }
      if (req.get_header_value("Authorization") != expected_auth_ && !expected_auth_.empty()) {
        res.status = 401;
        return;
      }
      nlohmann::json body = {
          {"id", "mock-" + std::to_string(n)},
          {"object", "chat.completion"},
          {"choices", nlohmann::json::array({{{"index", 0},
                                              {"message", {{"role", "assistant"}, {"content", reply_(n)}}},
                                              {"finish_reason", "stop"}}})},
      };
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockChatServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int requests() const { return requests_; }
  std::string last_body() const {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  void require_auth(std::string header) { expected_auth_ = std::move(header); }

private:
  ReplyFn reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  std::string last_body_;
  std::string expected_auth_;
};

/// A port with nothing listening on it.
inline int closed_port() {
  httplib::Server s;
  const int port = s.bind_to_any_port("127.0.0.1");
  return port; // the socket is closed when `s` goes out of scope
}

} // namespace behavbench::testing
