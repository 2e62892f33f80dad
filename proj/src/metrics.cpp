#include "vcd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "vcd/error.hpp"

namespace vcd {
namespace {

std::unordered_map<EntityId, EntityId> pred_to_gt(const EntityMatching& m) {
  std::unordered_map<EntityId, EntityId> map;
  map.reserve(m.pairs.size());
  for (const auto& p : m.pairs) map.emplace(p.pred, p.gt);
  return map;
}

void require_gt_edges(const CausalGraph& gt) {
  if (gt.edges().empty()) throw Error(ErrorCode::kEmptyGroundTruth, "ground truth has no causal edges");
}

}  // namespace

double f1_score(double recall, double precision) {
  const double s = recall + precision;
  return s > 0.0 ? 2.0 * recall * precision / s : 0.0;
}

GraphScore score_graph(const CausalGraph& pred, const CausalGraph& gt, const EntityMatching& matching) {
  require_gt_edges(gt);
  const auto map = pred_to_gt(matching);
  GraphScore s;
  s.gt_edges = gt.edges().size();

  // CausalGraph already rejects duplicate edges; the mapped set guards against
  // counting one gt edge twice.
  std::set<std::pair<EntityId, EntityId>> counted;
  std::set<std::pair<EntityId, EntityId>> distinct_pred;
  for (const auto& e : pred.edges()) {
    if (!distinct_pred.emplace(e.cause, e.effect).second) continue;
    ++s.pred_edges;
    const auto c = map.find(e.cause);
    const auto f = map.find(e.effect);
    if (c == map.end() || f == map.end()) continue;
    if (gt.has_edge(c->second, f->second) && counted.emplace(c->second, f->second).second) {
      ++s.matched_edges;
    }
  }
  s.recall = static_cast<double>(s.matched_edges) / static_cast<double>(s.gt_edges);
  if (s.pred_edges == 0) {
    s.empty_prediction = true;
    s.precision = 0.0;
  } else {
    s.precision = static_cast<double>(s.matched_edges) / static_cast<double>(s.pred_edges);
  }
  s.f1 = f1_score(s.recall, s.precision);
  return s;
}

double reachable_recall(const CausalGraph&, const CausalGraph& gt, const EntityMatching& matching) {
  require_gt_edges(gt);
  std::unordered_set<EntityId> detected;
  for (const auto& p : matching.pairs) detected.insert(p.gt);
  std::size_t reachable = 0;
  for (const auto& e : gt.edges()) {
    if (detected.contains(e.cause) && detected.contains(e.effect)) ++reachable;
  }
  return static_cast<double>(reachable) / static_cast<double>(gt.edges().size());
}

ReasoningLossReport reasoning_loss_report(double recall, double reachable) {
  if (!(reachable > 0.0)) throw Error(ErrorCode::kZeroReachableRecall, "reachable recall must be positive");
  ReasoningLossReport r{recall, reachable, 0.0, false};
  if (recall > reachable) {
    r.clamped = true;
    recall = reachable;
  }
  r.loss = (reachable - std::max(recall, 0.0)) / reachable;
  return r;
}

double reasoning_loss(double recall, double reachable) { return reasoning_loss_report(recall, reachable).loss; }

double rsi(const std::vector<double>& recalls) {
  if (recalls.empty()) throw Error(ErrorCode::kEmptyBatch, "rsi needs at least one recall value");
  const double n = static_cast<double>(recalls.size());
  double mean = 0.0;
  for (const double r : recalls) mean += r;
  mean /= n;
  if (!(mean > 0.0)) throw Error(ErrorCode::kZeroMeanRecall, "recall curve has zero mean");
  const auto [lo, hi] = std::minmax_element(recalls.begin(), recalls.end());
  double var = 0.0;
  if (*lo != *hi) {
    for (const double r : recalls) var += (r - mean) * (r - mean);
  }
  const double sd = std::sqrt(var / n);
  return std::clamp(1.0 - sd / mean, 0.0, 1.0);
}

std::vector<double> default_sweep_thresholds() { return {0.3, 0.4, 0.5, 0.6, 0.7}; }

SweepReport make_sweep_report(std::vector<double> thresholds, std::vector<double> recalls) {
  SweepReport rep;
  rep.thresholds = std::move(thresholds);
  rep.recalls = std::move(recalls);
  try {
    rep.rsi = rsi(rep.recalls);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroMeanRecall) throw;
    rep.rsi = 0.0;
    rep.rsi_defined = false;
  }
  return rep;
}

SweepReport threshold_sweep(const CausalGraph& pred, const CausalGraph& gt, const std::vector<double>& thresholds,
                            Gating gating) {
  if (thresholds.empty()) throw Error(ErrorCode::kInvalidArgument, "empty threshold list");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::kInvalidArgument, "thresholds must be ascending");
  }
  std::vector<double> recalls;
  recalls.reserve(thresholds.size());
  for (const double t : thresholds) {
    const EntityMatching m = match_entities(pred.entities(), gt.entities(), t, gating);
    recalls.push_back(score_graph(pred, gt, m).recall);
  }
  return make_sweep_report(thresholds, std::move(recalls));
}

GraphScore aggregate(const std::vector<GraphScore>& per_image, Aggregation mode) {
  if (per_image.empty()) throw Error(ErrorCode::kEmptyBatch, "nothing to aggregate");
  GraphScore out;
  for (const auto& s : per_image) {
    out.matched_edges += s.matched_edges;
    out.pred_edges += s.pred_edges;
    out.gt_edges += s.gt_edges;
  }
  if (mode == Aggregation::kMacro) {
    const double n = static_cast<double>(per_image.size());
    for (const auto& s : per_image) {
      out.recall += s.recall;
      out.precision += s.precision;
      out.f1 += s.f1;
    }
    out.recall /= n;
    out.precision /= n;
    out.f1 /= n;
  } else {
    out.recall = out.gt_edges ? static_cast<double>(out.matched_edges) / static_cast<double>(out.gt_edges) : 0.0;
    out.empty_prediction = out.pred_edges == 0;
    out.precision =
        out.pred_edges ? static_cast<double>(out.matched_edges) / static_cast<double>(out.pred_edges) : 0.0;
    out.f1 = f1_score(out.recall, out.precision);
  }
  return out;
}

PairEvaluation evaluate_pair(const CausalGraph& pred, const CausalGraph& gt, double threshold, Gating gating) {
  PairEvaluation ev;
  ev.matching = match_entities(pred.entities(), gt.entities(), threshold, gating);
  ev.score = score_graph(pred, gt, ev.matching);
  ev.reachable_recall = reachable_recall(pred, gt, ev.matching);
  return ev;
}

}  // namespace vcd
