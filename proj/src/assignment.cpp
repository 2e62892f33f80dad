#include "vcd/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vcd/error.hpp"

namespace vcd {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  if (cells_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kInvalidArgument, "cost matrix is not rectangular");
  }
  for (const double c : cells_) {
    if (!std::isfinite(c)) throw Error(ErrorCode::kNonFiniteCost, "cost matrix contains a non-finite cell");
  }
}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> cells;
  cells.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(ErrorCode::kInvalidArgument, "cost matrix is not rectangular");
    cells.insert(cells.end(), r.begin(), r.end());
  }
  return CostMatrix(rows.size(), cols, std::move(cells));
}

namespace {

// Square working copy with constant padding. Every assignment uses exactly
// |rows - cols| padded cells, so the padding value never changes which real
// assignment is optimal.
struct Square {
  std::size_t n = 0;
  std::vector<double> c;
  double at(std::size_t i, std::size_t j) const { return c[i * n + j]; }
};

Square pad(const CostMatrix& m) {
  Square s;
  s.n = std::max(m.rows(), m.cols());
  double hi = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t k = 0; k < m.cols(); ++k) hi = std::max(hi, std::abs(m.at(r, k)));
  s.c.assign(s.n * s.n, hi + 1.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t k = 0; k < m.cols(); ++k) s.c[r * s.n + k] = m.at(r, k);
  return s;
}

struct DualSolution {
  std::vector<double> u;             // row potentials
  std::vector<double> v;             // column potentials
  std::vector<std::size_t> row_col;  // row -> column
};

// Shortest augmenting path variant of the Hungarian method, O(n^3).
DualSolution solve(const Square& s) {
  const std::size_t n = s.n;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = s.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  DualSolution out;
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  out.row_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.row_col[p[j] - 1] = j - 1;
  return out;
}

// Any perfect matching on zero-reduced-cost cells is optimal (complementary
// slackness), so the lexicographically smallest optimum is found greedily on
// that subgraph: row by row, take the smallest column that still leaves a
// perfect matching for the remaining rows.
class TightRefiner {
 public:
  TightRefiner(const Square& s, const DualSolution& d) : s_(s), d_(d), row_col_(d.row_col), col_row_(s.n) {
    double scale = 1.0;
    for (const double c : s.c) scale = std::max(scale, std::abs(c));
    tol_ = 1e-9 * scale;
    for (std::size_t i = 0; i < s_.n; ++i) col_row_[row_col_[i]] = i;
  }

  std::vector<std::size_t> run() {
    const std::size_t n = s_.n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < row_col_[i]; ++j) {
        if (!tight(i, j) || col_row_[j] < i) continue;
        if (try_fix(i, j)) break;
      }
    }
    return row_col_;
  }

 private:
  bool tight(std::size_t i, std::size_t j) const { return std::abs(s_.at(i, j) - d_.u[i] - d_.v[j]) <= tol_; }

  // Reassign row i to column j; the displaced row must reach i's old column
  // through an alternating path over rows > i.
  bool try_fix(std::size_t i, std::size_t j) {
    const std::size_t displaced = col_row_[j];
    const std::size_t freed = row_col_[i];
    std::vector<std::size_t> saved_rc = row_col_, saved_cr = col_row_;
    row_col_[i] = j;
    col_row_[j] = i;
    col_row_[freed] = s_.n;  // free
    seen_.assign(s_.n, 0);
    if (augment(displaced, i, j)) return true;
    row_col_ = std::move(saved_rc);
    col_row_ = std::move(saved_cr);
    return false;
  }

  bool augment(std::size_t row, std::size_t fixed_row, std::size_t fixed_col) {
    for (std::size_t c = 0; c < s_.n; ++c) {
      if (c == fixed_col || seen_[c] || !tight(row, c)) continue;
      const std::size_t owner = col_row_[c];
      if (owner != s_.n && owner <= fixed_row) continue;
      seen_[c] = 1;
      if (owner == s_.n || augment(owner, fixed_row, fixed_col)) {
        row_col_[row] = c;
        col_row_[c] = row;
        return true;
      }
    }
    return false;
  }

  const Square& s_;
  const DualSolution& d_;
  std::vector<std::size_t> row_col_;
  std::vector<std::size_t> col_row_;
  std::vector<char> seen_;
  double tol_ = 0.0;
};

}  // namespace

Assignment hungarian(const CostMatrix& costs) {
  Assignment result;
  if (costs.empty()) return result;
  const Square s = pad(costs);
  const DualSolution dual = solve(s);
  const std::vector<std::size_t> row_col = TightRefiner(s, dual).run();
  for (std::size_t r = 0; r < costs.rows(); ++r) {
    const std::size_t c = row_col[r];
    if (c < costs.cols()) {
      result.pairs.emplace_back(r, c);
      result.total_cost += costs.at(r, c);
    }
  }
  return result;
}

std::optional<EntityId> EntityMatching::gt_for(EntityId pred) const {
  for (const auto& p : pairs) {
    if (p.pred == pred) return p.gt;
  }
  return std::nullopt;
}

EntityMatching match_entities(const std::vector<Entity>& pred, const std::vector<Entity>& gt, double threshold,
                              Gating gating) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "GIoU threshold must lie in [-1, 1]");
  }
  EntityMatching m;
  std::vector<BoundingBox> pb, gb;
  pb.reserve(pred.size());
  gb.reserve(gt.size());
  for (const auto& e : pred) pb.push_back(e.box);
  for (const auto& e : gt) gb.push_back(e.box);

  std::vector<double> overlap(pred.size() * gt.size());
  overlap_matrix(pb, gb, OverlapMeasure::kGiou, overlap);

  std::vector<double> cost(overlap.size());
  for (std::size_t k = 0; k < overlap.size(); ++k) {
    const bool masked = gating == Gating::kMaskBefore && overlap[k] < threshold;
    cost[k] = masked ? 3.0 : 1.0 - overlap[k];
  }
  const Assignment a = hungarian(CostMatrix(pred.size(), gt.size(), std::move(cost)));

  std::vector<char> pred_used(pred.size()), gt_used(gt.size());
  for (const auto& [r, c] : a.pairs) {
    const double g = overlap[r * gt.size() + c];
    if (g < threshold) continue;
    m.pairs.push_back({pred[r].id, gt[c].id, g});
    pred_used[r] = 1;
    gt_used[c] = 1;
  }
  for (std::size_t r = 0; r < pred.size(); ++r)
    if (!pred_used[r]) m.unmatched_pred.insert(pred[r].id);
  for (std::size_t c = 0; c < gt.size(); ++c)
    if (!gt_used[c]) m.unmatched_gt.insert(gt[c].id);
  return m;
}

}  // namespace vcd
