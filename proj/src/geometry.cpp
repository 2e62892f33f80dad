#include "vcd/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "kernels/overlap_formula.hpp"
#include "vcd/error.hpp"
#include "vcd/simd.hpp"

namespace vcd {

bool BoundingBox::valid(double x1, double y1, double x2, double y2) noexcept {
  const bool finite = std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
  return finite && x1 >= 0.0 && y1 >= 0.0 && x2 > x1 && y2 > y1;
}

BoundingBox::BoundingBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!valid(x1, y1, x2, y2)) {
    throw Error(ErrorCode::kInvalidBox, "invalid box " + to_string(*this));
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  return simd::detail::iou_value(
      simd::detail::overlap_terms(a.x1(), a.y1(), a.x2(), a.y2(), b.x1(), b.y1(), b.x2(), b.y2()));
}

double giou(const BoundingBox& a, const BoundingBox& b) noexcept {
  return simd::detail::giou_value(
      simd::detail::overlap_terms(a.x1(), a.y1(), a.x2(), a.y2(), b.x1(), b.y1(), b.x2(), b.y2()));
}

BoundingBox xywh_to_corners(double x, double y, double w, double h) {
  if (!(w > 0.0) || !(h > 0.0)) {
    throw Error(ErrorCode::kNonPositiveExtent, "width and height must be positive");
  }
  return BoundingBox(x, y, x + w, y + h);
}

BoundingBox translated(const BoundingBox& box, double dx, double dy) {
  return BoundingBox(box.x1() + dx, box.y1() + dy, box.x2() + dx, box.y2() + dy);
}

std::string to_string(const BoundingBox& box) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "[%g, %g, %g, %g]", box.x1(), box.y1(), box.x2(), box.y2());
  return buf;
}

void overlap_matrix(std::span<const BoundingBox> a, std::span<const BoundingBox> b, OverlapMeasure measure,
                    std::span<double> out) {
  if (out.size() != a.size() * b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "overlap_matrix output size mismatch");
  }
  std::vector<double> x1(b.size()), y1(b.size()), x2(b.size()), y2(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    x1[j] = b[j].x1();
    y1[j] = b[j].y1();
    x2[j] = b[j].x2();
    y2[j] = b[j].y2();
  }
  const simd::BoxColumns columns{x1.data(), y1.data(), x2.data(), y2.data(), b.size()};
  const simd::Level level = simd::detected_level();
  const simd::RowKernel kernel =
      measure == OverlapMeasure::kGiou ? simd::giou_row_kernel(level) : simd::iou_row_kernel(level);
  for (std::size_t i = 0; i < a.size(); ++i) {
    kernel(a[i].x1(), a[i].y1(), a[i].x2(), a[i].y2(), columns, out.data() + i * b.size());
  }
}

}  // namespace vcd
