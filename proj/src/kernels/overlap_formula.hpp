#pragma once

#include <algorithm>

// Reference overlap arithmetic. The SIMD kernels replicate this operation
// order lane-wise; keep them in sync when editing.

namespace vcd::simd::detail {

struct Overlap {
  double inter;
  double uni;
  double enclosing;
};

inline Overlap overlap_terms(double ax1, double ay1, double ax2, double ay2,
                             double bx1, double by1, double bx2, double by2) {
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double area_a = (ax2 - ax1) * (ay2 - ay1);
  const double area_b = (bx2 - bx1) * (by2 - by1);
  const double uni = (area_a + area_b) - inter;
  const double ew = std::max(ax2, bx2) - std::min(ax1, bx1);
  const double eh = std::max(ay2, by2) - std::min(ay1, by1);
  return {inter, uni, ew * eh};
}

inline double iou_value(const Overlap& o) { return o.inter / o.uni; }

inline double giou_value(const Overlap& o) {
  return o.inter / o.uni - (o.enclosing - o.uni) / o.enclosing;
}

}  // namespace vcd::simd::detail
