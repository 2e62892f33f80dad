#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "vcd/reward.hpp"

namespace vcd {

inline constexpr int kServiceSchemaVersion = 1;
inline constexpr std::string_view kServiceVersion = "0.1.0";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path dataset;
  RewardConfig defaults;
  std::size_t batch_cap = 1024;
  std::size_t body_limit = 8 * 1024 * 1024;  // bytes
  std::optional<std::string> token;  // required as "Authorization: Bearer <token>" when set
  std::size_t threads = 8;
  std::size_t jobs = 1;  // scoring threads per request
};

struct ServiceReply {
  int status = 200;
  nlohmann::json body;
};

/// Reward scoring over an immutable ground-truth snapshot. The HTTP layer is a
/// thin adapter over handle_score / health, which are usable directly.
class RewardService {
 public:
  using Loader = std::function<GroundTruthIndex()>;

  explicit RewardService(ServiceConfig config);
  ~RewardService();
  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  /// Installs the ground truth immediately.
  void set_ground_truth(GroundTruthIndex gt);
  /// Runs `loader` on a background thread; health reports "loading" until it
  /// finishes and "degraded" if it throws.
  void load_async(Loader loader);
  /// Blocks until a background load has finished.
  void wait_loaded();

  ServiceReply handle_score(const std::string& body, const std::string& authorization = "") const;
  nlohmann::json health() const;

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws ConfigError when the address cannot be bound.
  int start();
  void stop();

 private:
  enum class Status { kLoading, kReady, kDegraded };
  std::shared_ptr<const GroundTruthIndex> snapshot() const;

  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::shared_ptr<const GroundTruthIndex> gt_;
  Status status_ = Status::kLoading;
  std::string reason_;
  std::thread loader_;
  struct Server;
  std::unique_ptr<Server> server_;
  std::thread server_thread_;
};

nlohmann::json breakdown_json(const RewardBreakdown& b);

}  // namespace vcd
