#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vcd/graph.hpp"

namespace vcd {

/// Dense rectangular cost matrix, row-major. All cells finite.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> cells);
  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }
  double at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cells_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending by row
  double total_cost = 0.0;
};

/// Minimum-cost one-to-one assignment of min(rows, cols) pairs. Among optimal
/// assignments the lexicographically smallest (row, col) sequence is returned.
/// An empty matrix yields an empty assignment.
Assignment hungarian(const CostMatrix& costs);

struct MatchedPair {
  EntityId pred;
  EntityId gt;
  double giou = 0.0;
};

struct EntityMatching {
  std::vector<MatchedPair> pairs;
  std::set<EntityId> unmatched_pred;
  std::set<EntityId> unmatched_gt;

  std::optional<EntityId> gt_for(EntityId pred) const;
};

enum class Gating {
  kAfterAssignment,  // assign globally on 1 - GIoU, then drop pairs under threshold
  kMaskBefore,       // forbid sub-threshold cells before assigning
};

/// Hungarian matching of predicted to ground-truth entities on cost 1 - GIoU.
/// Labels are ignored. Every surviving pair has giou >= threshold.
EntityMatching match_entities(const std::vector<Entity>& pred, const std::vector<Entity>& gt, double threshold,
                              Gating gating = Gating::kAfterAssignment);

}  // namespace vcd
