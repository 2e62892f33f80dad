#include "overlap_formula.hpp"
#include "vcd/simd.hpp"

namespace vcd::simd::scalar {

void giou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out) {
  for (std::size_t j = 0; j < columns.count; ++j) {
    out[j] = detail::giou_value(detail::overlap_terms(qx1, qy1, qx2, qy2, columns.x1[j], columns.y1[j],
                                                      columns.x2[j], columns.y2[j]));
  }
}

void iou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out) {
  for (std::size_t j = 0; j < columns.count; ++j) {
    out[j] = detail::iou_value(detail::overlap_terms(qx1, qy1, qx2, qy2, columns.x1[j], columns.y1[j],
                                                     columns.x2[j], columns.y2[j]));
  }
}

}  // namespace vcd::simd::scalar
