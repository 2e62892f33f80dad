// Built with -mavx2 (no -mfma): four boxes per iteration, scalar tail.
#include <immintrin.h>

#include "overlap_formula.hpp"
#include "vcd/simd.hpp"

namespace vcd::simd::avx2 {
namespace {

struct Terms {
  __m256d inter;
  __m256d uni;
  __m256d enclosing;
};

inline Terms terms4(__m256d ax1, __m256d ay1, __m256d ax2, __m256d ay2, const BoxColumns& c, std::size_t j) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d bx1 = _mm256_loadu_pd(c.x1 + j);
  const __m256d by1 = _mm256_loadu_pd(c.y1 + j);
  const __m256d bx2 = _mm256_loadu_pd(c.x2 + j);
  const __m256d by2 = _mm256_loadu_pd(c.y2 + j);

  const __m256d iw = _mm256_max_pd(zero, _mm256_sub_pd(_mm256_min_pd(ax2, bx2), _mm256_max_pd(ax1, bx1)));
  const __m256d ih = _mm256_max_pd(zero, _mm256_sub_pd(_mm256_min_pd(ay2, by2), _mm256_max_pd(ay1, by1)));
  const __m256d inter = _mm256_mul_pd(iw, ih);
  const __m256d area_a = _mm256_mul_pd(_mm256_sub_pd(ax2, ax1), _mm256_sub_pd(ay2, ay1));
  const __m256d area_b = _mm256_mul_pd(_mm256_sub_pd(bx2, bx1), _mm256_sub_pd(by2, by1));
  const __m256d uni = _mm256_sub_pd(_mm256_add_pd(area_a, area_b), inter);
  const __m256d ew = _mm256_sub_pd(_mm256_max_pd(ax2, bx2), _mm256_min_pd(ax1, bx1));
  const __m256d eh = _mm256_sub_pd(_mm256_max_pd(ay2, by2), _mm256_min_pd(ay1, by1));
  return {inter, uni, _mm256_mul_pd(ew, eh)};
}

}  // namespace

void giou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out) {
  const __m256d ax1 = _mm256_set1_pd(qx1);
  const __m256d ay1 = _mm256_set1_pd(qy1);
  const __m256d ax2 = _mm256_set1_pd(qx2);
  const __m256d ay2 = _mm256_set1_pd(qy2);
  std::size_t j = 0;
  for (; j + 4 <= columns.count; j += 4) {
    const Terms t = terms4(ax1, ay1, ax2, ay2, columns, j);
    const __m256d iou = _mm256_div_pd(t.inter, t.uni);
    const __m256d empty = _mm256_div_pd(_mm256_sub_pd(t.enclosing, t.uni), t.enclosing);
    _mm256_storeu_pd(out + j, _mm256_sub_pd(iou, empty));
  }
  for (; j < columns.count; ++j) {
    out[j] = detail::giou_value(detail::overlap_terms(qx1, qy1, qx2, qy2, columns.x1[j], columns.y1[j],
                                                      columns.x2[j], columns.y2[j]));
  }
}

void iou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out) {
  const __m256d ax1 = _mm256_set1_pd(qx1);
  const __m256d ay1 = _mm256_set1_pd(qy1);
  const __m256d ax2 = _mm256_set1_pd(qx2);
  const __m256d ay2 = _mm256_set1_pd(qy2);
  std::size_t j = 0;
  for (; j + 4 <= columns.count; j += 4) {
    const Terms t = terms4(ax1, ay1, ax2, ay2, columns, j);
    _mm256_storeu_pd(out + j, _mm256_div_pd(t.inter, t.uni));
  }
  for (; j < columns.count; ++j) {
    out[j] = detail::iou_value(detail::overlap_terms(qx1, qy1, qx2, qy2, columns.x1[j], columns.y1[j],
                                                     columns.x2[j], columns.y2[j]));
  }
}

}  // namespace vcd::simd::avx2
