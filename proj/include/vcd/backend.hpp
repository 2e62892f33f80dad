#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcd/geometry.hpp"

namespace vcd {

/// An image handed to a model: a file path (optionally cropped to a region)
/// or an inline base64 payload.
struct ImageRef {
  std::string path;
  std::string base64;
  std::string mime = "image/jpeg";
  std::optional<BoundingBox> crop;

  /// Stable textual handle, e.g. "img/0.jpg#crop=[10, 10, 200, 150]".
  std::string handle() const;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

/// Region box grown by `padding` of its width/height on each side, clipped to
/// the image origin. Model outputs for a crop are shifted back by the crop's
/// top-left corner.
BoundingBox padded_crop(const BoundingBox& region, double padding);

struct DecodeParams {
  double temperature = 0.0;
  int max_tokens = 4096;
  std::optional<std::int64_t> seed;
};

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  std::vector<ImageRef> images;
  DecodeParams decode;
  std::string purpose;  // "region", "entity", "causality", "e2e"; not sent over the wire

  /// Throws InvalidArgument on empty user text, max_tokens < 1 or negative temperature.
  void validate() const;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::chrono::milliseconds latency{0};
  TokenUsage usage;
};

/// Chat-completion boundary. Implementations are shareable across threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  /// Requests the caller may keep in flight at once.
  virtual std::size_t max_concurrency() const { return 1; }
};

/// FNV-1a over system text, a newline, and user text; 16 lowercase hex digits.
std::string prompt_hash(const ChatRequest& request);

// Scripted replay backend ------------------------------------------------

struct ScriptMatcher {
  std::optional<std::string> purpose;
  std::optional<std::string> contains;
  std::optional<std::string> image;  // ImageRef::handle() of the first image
  std::optional<std::string> prompt_hash;
  std::optional<std::int64_t> seed;
  std::optional<bool> greedy;  // temperature == 0

  bool matches(const ChatRequest& request) const;
};

struct ScriptRecord {
  ScriptMatcher match;
  std::string response;
  bool repeat = false;  // reusable instead of consumed once
};

/// Replays responses: each request takes the first unconsumed record whose
/// matcher accepts it, in file order. Throws ScriptExhausted when none does.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRecord> records);

  /// Line-delimited records: {"match": {...}, "response": "...", "repeat": false}.
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
  static std::vector<ScriptRecord> parse_script(const std::string& jsonl);

  ChatResponse complete(const ChatRequest& request) override;
  std::size_t calls() const;

 private:
  std::vector<ScriptRecord> records_;
  std::vector<char> consumed_;
  std::size_t calls_ = 0;
  mutable std::mutex mutex_;
};

// OpenAI-compatible HTTP backend ----------------------------------------

struct HttpBackendConfig {
  std::string endpoint = "https://api.openai.com/v1";  // POSTs to {endpoint}/chat/completions
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_initial{500};
  std::chrono::milliseconds backoff_max{8000};
  std::size_t concurrency = 4;
  double rate_limit_per_sec = 0.0;  // 0 disables
};

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  ChatResponse complete(const ChatRequest& request) override;
  std::size_t max_concurrency() const override { return config_.concurrency; }

  /// Request body sent for `request` (exposed for inspection and tests).
  nlohmann::json request_body(const ChatRequest& request) const;

 private:
  struct Limits;
  HttpBackendConfig config_;
  std::string api_key_;
  std::unique_ptr<Limits> limits_;
};

/// Base64 data URL for an image, cropping when the reference asks for it.
std::string image_data_url(const ImageRef& image);

std::string base64_encode(std::string_view bytes);

// Configuration ------------------------------------------------------------

struct BackendConfig {
  std::string type = "openai";  // "openai" | "scripted"
  HttpBackendConfig http;
  std::filesystem::path script;
};

/// JSON config file; VCD_ENDPOINT, VCD_MODEL and VCD_API_KEY_ENV override
/// the corresponding fields. Relative script paths resolve against the file.
BackendConfig load_backend_config(const std::filesystem::path& path);
BackendConfig backend_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace vcd
