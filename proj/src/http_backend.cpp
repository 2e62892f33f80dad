#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>

#ifdef VCD_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

#include "vcd/backend.hpp"
#include "vcd/error.hpp"

namespace vcd {
namespace {

using Clock = std::chrono::steady_clock;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // base path, no trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kConfigError, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "image " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string image_data_url(const ImageRef& image) {
  if (!image.base64.empty()) return "data:" + image.mime + ";base64," + image.base64;
  if (!image.crop) return "data:" + image.mime + ";base64," + base64_encode(read_file(image.path));
#ifdef VCD_HAVE_OPENCV
  const cv::Mat full = cv::imread(image.path, cv::IMREAD_COLOR);
  if (full.empty()) throw Error(ErrorCode::kUnreadableFile, "image " + image.path);
  const auto& c = *image.crop;
  const int x1 = std::clamp(static_cast<int>(c.x1()), 0, full.cols - 1);
  const int y1 = std::clamp(static_cast<int>(c.y1()), 0, full.rows - 1);
  const int x2 = std::clamp(static_cast<int>(std::ceil(c.x2())), x1 + 1, full.cols);
  const int y2 = std::clamp(static_cast<int>(std::ceil(c.y2())), y1 + 1, full.rows);
  std::vector<unsigned char> buf;
  cv::imencode(".jpg", full(cv::Rect(x1, y1, x2 - x1, y2 - y1)), buf);
  return "data:image/jpeg;base64," + base64_encode(std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
#else
  throw Error(ErrorCode::kConfigError, "image cropping requires a build with OpenCV");
#endif
}

struct HttpBackend::Limits {
  explicit Limits(std::size_t concurrency) : slots(static_cast<std::ptrdiff_t>(concurrency)) {}
  std::counting_semaphore<4096> slots;
  std::mutex rate_mutex;
  Clock::time_point next_slot = Clock::now();
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), limits_(std::make_unique<Limits>(std::min<std::size_t>(config_.concurrency, 4096))) {
  split_endpoint(config_.endpoint);
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

HttpBackend::~HttpBackend() = default;

nlohmann::json HttpBackend::request_body(const ChatRequest& request) const {
  nlohmann::json messages = nlohmann::json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", request.user_text}});
  for (const auto& img : request.images) {
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_data_url(img)}}}});
  }
  messages.push_back({{"role", "user"}, {"content", content}});
  nlohmann::json body = {{"model", config_.model},
                         {"messages", messages},
                         {"temperature", request.decode.temperature},
                         {"max_tokens", request.decode.max_tokens}};
  if (request.decode.seed) body["seed"] = *request.decode.seed;
  return body;
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  request.validate();
  const Endpoint ep = split_endpoint(config_.endpoint);
  const std::string payload = request_body(request).dump();

  limits_->slots.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{limits_->slots};

  auto backoff = config_.backoff_initial;
  ErrorCode last_code = ErrorCode::kTransportFailure;
  std::string last_message;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, config_.backoff_max);
    }
    if (config_.rate_limit_per_sec > 0.0) {
      Clock::time_point wait_until;
      {
        std::scoped_lock lock(limits_->rate_mutex);
        const auto spacing = std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(1.0 / config_.rate_limit_per_sec));
        wait_until = std::max(limits_->next_slot, Clock::now());
        limits_->next_slot = wait_until + spacing;
      }
      std::this_thread::sleep_until(wait_until);
    }

    httplib::Client client(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto start = Clock::now();
    const auto res = client.Post(ep.path + "/chat/completions", headers, payload, "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);

    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && elapsed >= config_.timeout);
      last_code = timed_out ? ErrorCode::kTimeout : ErrorCode::kTransportFailure;
      last_message = httplib::to_string(err);
      continue;
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      throw Error(ErrorCode::kAuthFailure, "HTTP " + std::to_string(status) + ": " + res->body);
    }
    if (status == 429) {
      last_code = ErrorCode::kRateLimited;
      last_message = res->body;
      if (res->has_header("Retry-After")) {
        try {
          backoff = std::max(backoff, std::chrono::milliseconds(
                                          static_cast<std::int64_t>(std::stod(res->get_header_value("Retry-After")) * 1000)));
          backoff = std::min(backoff, config_.backoff_max);
        } catch (const std::exception&) {
        }
      }
      continue;
    }
    if (status == 408 || status == 500 || status == 502 || status == 503 || status == 504) {
      last_code = status == 408 ? ErrorCode::kTimeout : ErrorCode::kTransportFailure;
      last_message = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw Error(ErrorCode::kNonRetriableServerError, "HTTP " + std::to_string(status) + ": " + res->body);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      ChatResponse out;
      out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      out.latency = elapsed;
      if (j.contains("usage")) {
        out.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
        out.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kNonRetriableServerError, std::string("unexpected response body: ") + e.what());
    }
  }
  throw Error(last_code, "gave up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_message);
}

}  // namespace vcd
