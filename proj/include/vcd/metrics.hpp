#pragma once

#include <cstddef>
#include <vector>

#include "vcd/assignment.hpp"
#include "vcd/graph.hpp"

namespace vcd {

struct GraphScore {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::size_t matched_edges = 0;
  std::size_t pred_edges = 0;
  std::size_t gt_edges = 0;
  bool empty_prediction = false;  // precision 0/0 scored as 0
};

double f1_score(double recall, double precision);

/// Structural edge scoring: a predicted edge counts iff both endpoints are
/// matched and the mapped edge exists in the ground truth with the same
/// direction. Labels and predicates are ignored. Throws EmptyGroundTruth.
GraphScore score_graph(const CausalGraph& pred, const CausalGraph& gt, const EntityMatching& matching);

/// Fraction of ground-truth edges whose endpoints were both matched: the best
/// recall attainable with the detected entities. Throws EmptyGroundTruth.
double reachable_recall(const CausalGraph& pred, const CausalGraph& gt, const EntityMatching& matching);

struct ReasoningLossReport {
  double recall = 0.0;
  double reachable_recall = 0.0;
  double loss = 0.0;
  bool clamped = false;  // recall exceeded reachable recall
};

/// (reachable - recall) / reachable, with recall clamped to reachable.
/// Throws ZeroReachableRecall.
ReasoningLossReport reasoning_loss_report(double recall, double reachable_recall);
double reasoning_loss(double recall, double reachable_recall);

/// Recall Stability Index: max(0, 1 - std/mean) with population std.
/// Throws EmptyBatch for an empty curve and ZeroMeanRecall when mean is 0.
double rsi(const std::vector<double>& recalls);

struct SweepReport {
  std::vector<double> thresholds;
  std::vector<double> recalls;
  double rsi = 0.0;
  bool rsi_defined = true;  // false when every recall is zero
};

/// 0.3, 0.4, ..., 0.7
std::vector<double> default_sweep_thresholds();

SweepReport threshold_sweep(const CausalGraph& pred, const CausalGraph& gt, const std::vector<double>& thresholds,
                            Gating gating = Gating::kAfterAssignment);

/// RSI over an already computed recall curve; all-zero curves get rsi 0 and
/// rsi_defined = false.
SweepReport make_sweep_report(std::vector<double> thresholds, std::vector<double> recalls);

enum class Aggregation { kMacro, kMicro };

/// Macro: unweighted mean of per-image recall/precision/f1. Micro: ratios of
/// summed edge counts. Throws EmptyBatch.
GraphScore aggregate(const std::vector<GraphScore>& per_image, Aggregation mode);

/// Matching + scoring at one threshold.
struct PairEvaluation {
  EntityMatching matching;
  GraphScore score;
  double reachable_recall = 0.0;
};

PairEvaluation evaluate_pair(const CausalGraph& pred, const CausalGraph& gt, double threshold,
                             Gating gating = Gating::kAfterAssignment);

}  // namespace vcd
