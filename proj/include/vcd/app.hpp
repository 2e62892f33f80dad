#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcd/assignment.hpp"
#include "vcd/dataset.hpp"
#include "vcd/metrics.hpp"
#include "vcd/search.hpp"
#include "vcd/service.hpp"

namespace vcd {

/// Fixed-order JSON object writer with 6-decimal numbers, for golden files.
class ReportLine {
 public:
  ReportLine& str(std::string_view key, std::string_view value);
  ReportLine& num(std::string_view key, double value);
  ReportLine& integer(std::string_view key, std::int64_t value);
  ReportLine& boolean(std::string_view key, bool value);
  ReportLine& nums(std::string_view key, const std::vector<double>& values);
  ReportLine& strs(std::string_view key, const std::vector<std::string>& values);
  ReportLine& null(std::string_view key);
  std::string text() const { return body_ + "}"; }

 private:
  void key(std::string_view k);
  std::string body_ = "{";
};

std::string fixed6(double v);

/// Predictions keyed by img_id: dataset-schema records or
/// {"img_id": ..., "prediction_text": ...} model outputs.
struct PredictionSet {
  std::map<std::int64_t, CausalGraph> graphs;
  std::map<std::int64_t, bool> unparseable;  // model text that failed the grammar
  std::vector<ValidationEntry> report;
};

/// Throws UnreadableFile.
PredictionSet load_predictions(const std::filesystem::path& path);

struct EvalOptions {
  std::filesystem::path pred_file;
  std::filesystem::path gt_file;
  double threshold = 0.5;
  Aggregation mode = Aggregation::kMacro;
  std::optional<std::filesystem::path> out;  // JSONL; stdout when absent
  std::size_t jobs = 1;
};

struct ImageEval {
  std::int64_t img_id = 0;
  GraphScore score;
  double reachable_recall = 0.0;
  std::vector<std::string> flags;  // missing_prediction, unparseable_prediction, empty_prediction
};

struct EvalReport {
  std::vector<ImageEval> images;  // ordered by img_id
  GraphScore aggregate;
  double reachable_recall = 0.0;  // same aggregation as `aggregate`
  std::optional<double> reasoning_loss;
  std::vector<std::int64_t> unknown_predictions;  // img_ids absent from the ground truth
  std::vector<std::int64_t> skipped;              // ground truth without edges
};

EvalReport evaluate_sets(const PredictionSet& pred, const std::vector<DatasetRecord>& gt, double threshold,
                         Aggregation mode, std::size_t jobs = 1);
std::string eval_report_jsonl(const EvalReport& report, double threshold, Aggregation mode);
std::string eval_report_table(const EvalReport& report, double threshold, Aggregation mode);

struct SweepOptions {
  std::filesystem::path pred_file;
  std::filesystem::path gt_file;
  std::vector<double> thresholds = default_sweep_thresholds();
  Aggregation mode = Aggregation::kMacro;
  std::optional<std::filesystem::path> out;
  std::size_t jobs = 1;
};

struct ScoreOptions {
  std::filesystem::path pred_file;  // {"img_id", "prediction_text"} records
  std::filesystem::path gt_file;
  RewardConfig reward;
  std::optional<std::filesystem::path> out;
  std::size_t jobs = 1;
};

struct SearchOptions {
  std::filesystem::path dataset;
  std::filesystem::path backend_config;
  std::filesystem::path out_dir;
  std::filesystem::path images_dir = ".";
  std::string image_pattern = "{img_id}.jpg";
  SearchParams params;
  std::size_t jobs = 1;
  std::optional<std::size_t> limit;  // first N usable records
  bool dump_trees = false;
};

struct StatsOptions {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> report;  // validation report JSONL
  std::optional<std::filesystem::path> out;
  std::size_t top_k = 10;
};

struct ServeOptions {
  ServiceConfig service;
  std::optional<std::string> token_env;
};

// Each command writes its report and returns the process exit code
// (0 success, 1 fatal input or runtime error).
int cmd_evaluate(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err);
int cmd_search(const SearchOptions& opts, std::ostream& out, std::ostream& err);
int cmd_search(const SearchOptions& opts, Backend& backend, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err);
/// Serves until SIGINT or SIGTERM.
int cmd_serve(const ServeOptions& opts, std::ostream& out, std::ostream& err);

std::string filter_stats_table(const FilterStats& stats);
std::string image_path_for(const SearchOptions& opts, std::int64_t img_id);

}  // namespace vcd
