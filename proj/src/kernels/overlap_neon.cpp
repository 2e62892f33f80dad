// AArch64 Advanced SIMD: two boxes per iteration, scalar tail.
#include <arm_neon.h>

#include "overlap_formula.hpp"
#include "vcd/simd.hpp"

namespace vcd::simd::neon {
namespace {

struct Terms {
  float64x2_t inter;
  float64x2_t uni;
  float64x2_t enclosing;
};

inline Terms terms2(float64x2_t ax1, float64x2_t ay1, float64x2_t ax2, float64x2_t ay2, const BoxColumns& c,
                    std::size_t j) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t bx1 = vld1q_f64(c.x1 + j);
  const float64x2_t by1 = vld1q_f64(c.y1 + j);
  const float64x2_t bx2 = vld1q_f64(c.x2 + j);
  const float64x2_t by2 = vld1q_f64(c.y2 + j);

  const float64x2_t iw = vmaxq_f64(zero, vsubq_f64(vminq_f64(ax2, bx2), vmaxq_f64(ax1, bx1)));
  const float64x2_t ih = vmaxq_f64(zero, vsubq_f64(vminq_f64(ay2, by2), vmaxq_f64(ay1, by1)));
  const float64x2_t inter = vmulq_f64(iw, ih);
  const float64x2_t area_a = vmulq_f64(vsubq_f64(ax2, ax1), vsubq_f64(ay2, ay1));
  const float64x2_t area_b = vmulq_f64(vsubq_f64(bx2, bx1), vsubq_f64(by2, by1));
  const float64x2_t uni = vsubq_f64(vaddq_f64(area_a, area_b), inter);
  const float64x2_t ew = vsubq_f64(vmaxq_f64(ax2, bx2), vminq_f64(ax1, bx1));
  const float64x2_t eh = vsubq_f64(vmaxq_f64(ay2, by2), vminq_f64(ay1, by1));
  return {inter, uni, vmulq_f64(ew, eh)};
}

}  // namespace

void giou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out) {
  const float64x2_t ax1 = vdupq_n_f64(qx1);
  const float64x2_t ay1 = vdupq_n_f64(qy1);
  const float64x2_t ax2 = vdupq_n_f64(qx2);
  const float64x2_t ay2 = vdupq_n_f64(qy2);
  std::size_t j = 0;
  for (; j + 2 <= columns.count; j += 2) {
    const Terms t = terms2(ax1, ay1, ax2, ay2, columns, j);
    const float64x2_t iou = vdivq_f64(t.inter, t.uni);
    const float64x2_t empty = vdivq_f64(vsubq_f64(t.enclosing, t.uni), t.enclosing);
    vst1q_f64(out + j, vsubq_f64(iou, empty));
  }
  for (; j < columns.count; ++j) {
    out[j] = detail::giou_value(detail::overlap_terms(qx1, qy1, qx2, qy2, columns.x1[j], columns.y1[j],
                                                      columns.x2[j], columns.y2[j]));
  }
}

void iou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out) {
  const float64x2_t ax1 = vdupq_n_f64(qx1);
  const float64x2_t ay1 = vdupq_n_f64(qy1);
  const float64x2_t ax2 = vdupq_n_f64(qx2);
  const float64x2_t ay2 = vdupq_n_f64(qy2);
  std::size_t j = 0;
  for (; j + 2 <= columns.count; j += 2) {
    const Terms t = terms2(ax1, ay1, ax2, ay2, columns, j);
    vst1q_f64(out + j, vdivq_f64(t.inter, t.uni));
  }
  for (; j < columns.count; ++j) {
    out[j] = detail::iou_value(detail::overlap_terms(qx1, qy1, qx2, qy2, columns.x1[j], columns.y1[j],
                                                     columns.x2[j], columns.y2[j]));
  }
}

}  // namespace vcd::simd::neon
