#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "vcd/backend.hpp"
#include "vcd/error.hpp"
#include "vcd/parser.hpp"

namespace vcd {

std::string ImageRef::handle() const {
  std::string h = path.empty() ? "inline:" + std::to_string(base64.size()) : path;
  if (crop) h += "#crop=" + format_box(*crop);
  return h;
}

BoundingBox padded_crop(const BoundingBox& region, double padding) {
  const double px = region.width() * padding;
  const double py = region.height() * padding;
  return BoundingBox(std::max(0.0, region.x1() - px), std::max(0.0, region.y1() - py), region.x2() + px,
                     region.y2() + py);
}

void ChatRequest::validate() const {
  if (user_text.empty()) throw Error(ErrorCode::kInvalidArgument, "empty user text");
  if (decode.max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  if (!(decode.temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
}

std::string prompt_hash(const ChatRequest& request) {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix = [&h](std::string_view s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  mix(request.system_text);
  mix("\n");
  mix(request.user_text);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

BackendConfig backend_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  BackendConfig c;
  try {
    c.type = j.value("type", c.type);
    auto& h = c.http;
    h.endpoint = j.value("endpoint", h.endpoint);
    h.api_key_env = j.value("api_key_env", h.api_key_env);
    h.model = j.value("model", h.model);
    h.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<std::int64_t>(h.timeout.count())));
    h.max_retries = j.value("max_retries", h.max_retries);
    h.backoff_initial =
        std::chrono::milliseconds(j.value("backoff_initial_ms", static_cast<std::int64_t>(h.backoff_initial.count())));
    h.backoff_max =
        std::chrono::milliseconds(j.value("backoff_max_ms", static_cast<std::int64_t>(h.backoff_max.count())));
    h.concurrency = j.value("concurrency", h.concurrency);
    h.rate_limit_per_sec = j.value("rate_limit_per_sec", h.rate_limit_per_sec);
    if (j.contains("script")) {
      std::filesystem::path p = j.at("script").get<std::string>();
      c.script = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  if (const char* v = std::getenv("VCD_ENDPOINT")) c.http.endpoint = v;
  if (const char* v = std::getenv("VCD_MODEL")) c.http.model = v;
  if (const char* v = std::getenv("VCD_API_KEY_ENV")) c.http.api_key_env = v;
  if (c.type != "openai" && c.type != "scripted") throw Error(ErrorCode::kConfigError, "unknown backend type " + c.type);
  if (c.http.max_retries < 0 || c.http.concurrency < 1) {
    throw Error(ErrorCode::kConfigError, "max_retries must be >= 0 and concurrency >= 1");
  }
  return c;
}

BackendConfig load_backend_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return backend_config_from_json(j, path.parent_path());
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.type == "scripted") {
    return ScriptedBackend::from_file(config.script);
  }
  return std::make_unique<HttpBackend>(config.http);
}

}  // namespace vcd
