#include <fstream>
#include <sstream>

#include "vcd/backend.hpp"
#include "vcd/error.hpp"

namespace vcd {

bool ScriptMatcher::matches(const ChatRequest& request) const {
  if (purpose && *purpose != request.purpose) return false;
  if (contains && request.user_text.find(*contains) == std::string::npos &&
      request.system_text.find(*contains) == std::string::npos) {
    return false;
  }
  if (image) {
    if (request.images.empty() || request.images.front().handle() != *image) return false;
  }
  if (prompt_hash && *prompt_hash != vcd::prompt_hash(request)) return false;
  if (seed && request.decode.seed != seed) return false;
  if (greedy && *greedy != (request.decode.temperature == 0.0)) return false;
  return true;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRecord> records)
    : records_(std::move(records)), consumed_(records_.size(), 0) {}

std::vector<ScriptRecord> ScriptedBackend::parse_script(const std::string& jsonl) {
  std::vector<ScriptRecord> out;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScriptRecord r;
      r.response = j.at("response").get<std::string>();
      r.repeat = j.value("repeat", false);
      if (j.contains("match")) {
        const auto& m = j.at("match");
        if (m.contains("purpose")) r.match.purpose = m.at("purpose").get<std::string>();
        if (m.contains("contains")) r.match.contains = m.at("contains").get<std::string>();
        if (m.contains("image")) r.match.image = m.at("image").get<std::string>();
        if (m.contains("prompt_hash")) r.match.prompt_hash = m.at("prompt_hash").get<std::string>();
        if (m.contains("seed")) r.match.seed = m.at("seed").get<std::int64_t>();
        if (m.contains("greedy")) r.match.greedy = m.at("greedy").get<bool>();
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfigError, "script line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return std::make_unique<ScriptedBackend>(parse_script(ss.str()));
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  request.validate();
  std::scoped_lock lock(mutex_);
  ++calls_;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (consumed_[i] || !records_[i].match.matches(request)) continue;
    if (!records_[i].repeat) consumed_[i] = 1;
    return ChatResponse{records_[i].response, std::chrono::milliseconds(0), {}};
  }
  throw Error(ErrorCode::kScriptExhausted, "no script record for " + request.purpose + " request " +
                                               prompt_hash(request));
}

std::size_t ScriptedBackend::calls() const {
  std::scoped_lock lock(mutex_);
  return calls_;
}

}  // namespace vcd
