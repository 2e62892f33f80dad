#pragma once

#include <cstddef>
#include <string_view>

// Pairwise overlap kernels. One box from the left set is broadcast against a
// structure-of-arrays block of right boxes. All variants evaluate the exact
// same sequence of IEEE operations (no fused multiply-add), so their outputs
// compare bit-equal.

namespace vcd::simd {

enum class Level { kScalar, kAvx2, kNeon };

std::string_view to_string(Level level);

/// Best level compiled in and supported by the running CPU. The environment
/// variable VCD_SIMD=scalar forces the reference path.
Level detected_level();

/// Levels usable on this machine (always includes kScalar).
bool level_available(Level level);

struct BoxColumns {
  const double* x1;
  const double* y1;
  const double* x2;
  const double* y2;
  std::size_t count;
};

// out[j] = overlap(query, columns[j]) for j < columns.count
using RowKernel = void (*)(double qx1, double qy1, double qx2, double qy2,
                           const BoxColumns& columns, double* out);

RowKernel giou_row_kernel(Level level);
RowKernel iou_row_kernel(Level level);

namespace scalar {
void giou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out);
void iou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out);
}  // namespace scalar

#if defined(VCD_HAVE_AVX2)
namespace avx2 {
void giou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out);
void iou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out);
}  // namespace avx2
#endif

#if defined(VCD_HAVE_NEON)
namespace neon {
void giou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out);
void iou_row(double qx1, double qy1, double qx2, double qy2, const BoxColumns& columns, double* out);
}  // namespace neon
#endif

}  // namespace vcd::simd
