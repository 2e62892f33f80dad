#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vcd/assignment.hpp"
#include "vcd/error.hpp"
#include "vcd/graph.hpp"

namespace vcd {

struct RewardWeights {
  double recall = 0.5;
  double precision = 0.4;
  double format = 0.1;

  double sum() const noexcept { return recall + precision + format; }
  /// Throws InvalidArgument on negative, non-finite or all-zero weights.
  void validate() const;
  /// "0.5,0.4,0.1"
  static RewardWeights parse(const std::string& csv);

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// Unweighted terms in [0, 1] and their weighted total.
struct RewardBreakdown {
  double recall_term = 0.0;
  double precision_term = 0.0;
  double format_term = 0.0;
  double total = 0.0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

struct RewardConfig {
  RewardWeights weights;
  double threshold = 0.5;
  bool graded_format = false;  // fraction of well-formed records instead of 0/1
  Gating gating = Gating::kAfterAssignment;
};

/// Causal reward of one end-to-end prediction against ground truth.
/// Unparseable text scores zero recall and precision. Throws EmptyGroundTruth.
RewardBreakdown causal_reward(const std::string& prediction_text, const CausalGraph& gt, const RewardConfig& config);

using GroundTruthIndex = std::map<std::int64_t, CausalGraph>;

struct ScoreItem {
  std::int64_t img_id = 0;
  std::string prediction_text;
};

struct ItemError {
  ErrorCode code;
  std::string message;
};

struct ScoreResult {
  std::optional<RewardBreakdown> breakdown;
  std::optional<ItemError> error;

  bool ok() const noexcept { return breakdown.has_value(); }
};

/// Scores items independently, preserving order. Per-item failures
/// (UnknownGroundTruthRef, EmptyGroundTruth) are reported inline.
std::vector<ScoreResult> score_batch(const std::vector<ScoreItem>& items, const GroundTruthIndex& gt,
                                     const RewardConfig& config, std::size_t jobs = 1);

}  // namespace vcd
