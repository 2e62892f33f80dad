#include "vcd/service.hpp"

#include <cmath>

#include <httplib.h>

#include "vcd/error.hpp"

namespace vcd {
namespace {

using json = nlohmann::json;

ServiceReply error_reply(int status, std::string_view code, const std::string& message) {
  return {status, json{{"v", kServiceSchemaVersion}, {"error", {{"code", code}, {"message", message}}}}};
}

double number_field(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_number()) {
    throw Error(ErrorCode::kMalformedBody, std::string("\"") + name + "\" must be a number");
  }
  return j[name].get<double>();
}

RewardWeights parse_weights(const json& j) {
  RewardWeights w;
  if (j.is_array()) {
    if (j.size() != 3) throw Error(ErrorCode::kMalformedBody, "weights array needs three numbers");
    for (const auto& v : j) {
      if (!v.is_number()) throw Error(ErrorCode::kMalformedBody, "weights must be numbers");
    }
    w = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } else if (j.is_object()) {
    w = {number_field(j, "recall"), number_field(j, "precision"), number_field(j, "format")};
  } else {
    throw Error(ErrorCode::kMalformedBody, "weights must be an array or object");
  }
  try {
    w.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedBody, e.what());
  }
  return w;
}

}  // namespace

json breakdown_json(const RewardBreakdown& b) {
  return json{{"recall", b.recall_term}, {"precision", b.precision_term}, {"format", b.format_term}, {"total", b.total}};
}

struct RewardService::Server {
  httplib::Server http;
};

RewardService::RewardService(ServiceConfig config) : config_(std::move(config)) {
  config_.defaults.weights.validate();
}

RewardService::~RewardService() {
  stop();
  if (loader_.joinable()) loader_.join();
}

void RewardService::set_ground_truth(GroundTruthIndex gt) {
  auto snap = std::make_shared<const GroundTruthIndex>(std::move(gt));
  std::scoped_lock lock(mutex_);
  gt_ = std::move(snap);
  status_ = Status::kReady;
  reason_.clear();
}

void RewardService::load_async(Loader loader) {
  if (loader_.joinable()) loader_.join();
  {
    std::scoped_lock lock(mutex_);
    status_ = Status::kLoading;
  }
  loader_ = std::thread([this, loader = std::move(loader)] {
    try {
      set_ground_truth(loader());
    } catch (const std::exception& e) {
      std::scoped_lock lock(mutex_);
      status_ = Status::kDegraded;
      reason_ = e.what();
    }
  });
}

void RewardService::wait_loaded() {
  if (loader_.joinable()) loader_.join();
}

std::shared_ptr<const GroundTruthIndex> RewardService::snapshot() const {
  std::scoped_lock lock(mutex_);
  return gt_;
}

json RewardService::health() const {
  std::scoped_lock lock(mutex_);
  json j{{"v", kServiceSchemaVersion},
         {"status", status_ == Status::kReady ? "ready" : status_ == Status::kLoading ? "loading" : "degraded"},
         {"records_loaded", gt_ ? gt_->size() : 0},
         {"version", kServiceVersion}};
  if (status_ == Status::kDegraded) j["reason"] = reason_;
  return j;
}

ServiceReply RewardService::handle_score(const std::string& body, const std::string& authorization) const {
  if (config_.token && authorization != "Bearer " + *config_.token) {
    return error_reply(401, "Unauthorized", "missing or wrong bearer token");
  }
  if (body.size() > config_.body_limit) {
    return error_reply(413, to_string(ErrorCode::kPayloadTooLarge),
                       "body exceeds " + std::to_string(config_.body_limit) + " bytes");
  }
  const auto gt = snapshot();
  if (!gt) return error_reply(503, "NotReady", "ground truth is not loaded");

  const json req = json::parse(body, nullptr, false);
  std::vector<ScoreItem> items;
  std::vector<std::optional<ItemError>> item_errors;
  RewardConfig config = config_.defaults;
  try {
    if (req.is_discarded() || !req.is_object()) throw Error(ErrorCode::kMalformedBody, "body must be a JSON object");
    if (req.contains("v") && req["v"] != kServiceSchemaVersion) {
      throw Error(ErrorCode::kMalformedBody, "unsupported schema version " + req["v"].dump());
    }
    if (!req.contains("items") || !req["items"].is_array()) {
      throw Error(ErrorCode::kMalformedBody, "\"items\" must be an array");
    }
    const json& list = req["items"];
    if (list.size() > config_.batch_cap) {
      return error_reply(413, to_string(ErrorCode::kPayloadTooLarge),
                         std::to_string(list.size()) + " items exceed the batch cap of " +
                             std::to_string(config_.batch_cap));
    }
    if (req.contains("weights")) config.weights = parse_weights(req["weights"]);
    if (req.contains("threshold")) {
      const double t = number_field(req, "threshold");
      if (!(t >= -1.0 && t <= 1.0)) throw Error(ErrorCode::kMalformedBody, "threshold must lie in [-1, 1]");
      config.threshold = t;
    }
    for (const auto& it : list) {
      if (!it.is_object() || !it.contains("img_id") || !it["img_id"].is_number_integer() ||
          !it.contains("prediction_text") || !it["prediction_text"].is_string()) {
        items.push_back({});
        item_errors.push_back(
            ItemError{ErrorCode::kMalformedBody, "item needs integer img_id and string prediction_text"});
        continue;
      }
      items.push_back({it["img_id"].get<std::int64_t>(), it["prediction_text"].get<std::string>()});
      item_errors.emplace_back();
    }
  } catch (const Error& e) {
    return error_reply(400, to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return error_reply(400, to_string(ErrorCode::kMalformedBody), e.what());
  }

  std::vector<ScoreItem> valid;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!item_errors[i]) valid.push_back(items[i]);
  }
  const auto results = score_batch(valid, *gt, config, config_.jobs);

  json scores = json::array();
  json errors = json::array();
  std::size_t next = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::optional<ItemError> err = item_errors[i];
    if (!err) {
      const ScoreResult& r = results[next++];
      if (r.ok()) {
        scores.push_back(breakdown_json(*r.breakdown));
        continue;
      }
      err = r.error;
    }
    scores.push_back(nullptr);
    json e{{"index", i}, {"code", to_string(err->code)}, {"message", err->message}};
    e["img_id"] = item_errors[i] ? json(nullptr) : json(items[i].img_id);
    errors.push_back(std::move(e));
  }
  return {200, json{{"v", kServiceSchemaVersion}, {"scores", scores}, {"errors", errors}}};
}

int RewardService::start() {
  stop();
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  const std::size_t threads = std::max<std::size_t>(1, config_.threads);
  http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  http.set_payload_max_length(config_.body_limit);
  http.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(health().dump(), "application/json");
  });
  http.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceReply reply = handle_score(req.body, req.get_header_value("Authorization"));
    res.status = reply.status;
    res.set_content(reply.body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
  });
  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413 ? std::string(to_string(ErrorCode::kPayloadTooLarge))
                             : res.status == 404 ? "NotFound"
                                                 : to_string(ErrorCode::kMalformedBody).data();
    const ServiceReply r = error_reply(res.status, code, "HTTP " + std::to_string(res.status));
    res.set_content(r.body.dump(), "application/json");
  });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_reply(500, "Internal", what).body.dump(), "application/json");
  });

  int port = config_.port;
  if (port == 0) {
    port = http.bind_to_any_port(config_.host);
  } else if (!http.bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    server_.reset();
    throw Error(ErrorCode::kConfigError, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  server_thread_ = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  return port;
}

void RewardService::stop() {
  if (server_) server_->http.stop();
  if (server_thread_.joinable()) server_thread_.join();
  server_.reset();
}

}  // namespace vcd
