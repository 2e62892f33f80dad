#pragma once

#include <span>
#include <string>

namespace vcd {

/// Axis-aligned box in pixel coordinates, stored as top-left / bottom-right
/// corners. Construction validates x2 > x1, y2 > y1 and finite, non-negative
/// coordinates; an invalid box cannot exist.
class BoundingBox {
 public:
  BoundingBox(double x1, double y1, double x2, double y2);

  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double x2() const noexcept { return x2_; }
  double y2() const noexcept { return y2_; }
  double width() const noexcept { return x2_ - x1_; }
  double height() const noexcept { return y2_ - y1_; }
  double area() const noexcept { return width() * height(); }

  /// True when the four values would form a valid box.
  static bool valid(double x1, double y1, double x2, double y2) noexcept;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
  friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x1_;
  double y1_;
  double x2_;
  double y2_;
};

double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Generalized IoU: IoU minus the fraction of the tightest enclosing box not
/// covered by the union. Range [-1, 1].
double giou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Dataset boxes are top-left + width/height; converts to corners.
/// Throws NonPositiveExtent when w or h is not positive.
BoundingBox xywh_to_corners(double x, double y, double w, double h);

/// Shifts by (dx, dy). Throws InvalidBox if the result leaves the valid domain.
BoundingBox translated(const BoundingBox& box, double dx, double dy);

std::string to_string(const BoundingBox& box);

enum class OverlapMeasure { kIou, kGiou };

/// Row-major |a| x |b| matrix of pairwise overlaps, written to `out`
/// (out.size() must be a.size() * b.size()). Uses the fastest kernel the CPU
/// supports; every kernel produces bit-identical results to the scalar one.
void overlap_matrix(std::span<const BoundingBox> a, std::span<const BoundingBox> b,
                    OverlapMeasure measure, std::span<double> out);

}  // namespace vcd
