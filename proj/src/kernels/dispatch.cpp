#include <cstdlib>
#include <string>

#include "vcd/simd.hpp"

namespace vcd::simd {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::kScalar: return "scalar";
    case Level::kAvx2: return "avx2";
    case Level::kNeon: return "neon";
  }
  return "scalar";
}

bool level_available(Level level) {
  switch (level) {
    case Level::kScalar:
      return true;
    case Level::kAvx2:
#if defined(VCD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Level::kNeon:
#if defined(VCD_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Level detected_level() {
  static const Level level = [] {
    if (const char* forced = std::getenv("VCD_SIMD"); forced != nullptr && std::string(forced) == "scalar") {
      return Level::kScalar;
    }
    if (level_available(Level::kAvx2)) return Level::kAvx2;
    if (level_available(Level::kNeon)) return Level::kNeon;
    return Level::kScalar;
  }();
  return level;
}

RowKernel giou_row_kernel(Level level) {
  switch (level) {
#if defined(VCD_HAVE_AVX2)
    case Level::kAvx2: return &avx2::giou_row;
#endif
#if defined(VCD_HAVE_NEON)
    case Level::kNeon: return &neon::giou_row;
#endif
    default: return &scalar::giou_row;
  }
}

RowKernel iou_row_kernel(Level level) {
  switch (level) {
#if defined(VCD_HAVE_AVX2)
    case Level::kAvx2: return &avx2::iou_row;
#endif
#if defined(VCD_HAVE_NEON)
    case Level::kNeon: return &neon::iou_row;
#endif
    default: return &scalar::iou_row;
  }
}

}  // namespace vcd::simd
