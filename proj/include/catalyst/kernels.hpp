#pragma once

// Data-parallel inner loops used by the statistic, gamma, head and KNN code.
//
// Every kernel has a scalar reference implementation; on x86-64 an AVX2
// variant is compiled separately and chosen at first use when the host CPU
// supports it. Setting CATALYST_SIMD=scalar in the environment pins the
// scalar path. All reductions accumulate in double.

#include <cstddef>
#include <span>
#include <string_view>

namespace catalyst::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa) noexcept;

inline constexpr std::size_t kRankCountLimit = 64;

struct KernelTable {
  Isa isa;
  // Σ x
  double (*sum)(std::span<const float> x);
  // Σ (x - center)²
  double (*sum_sq_dev)(std::span<const float> x, double center);
  // max x; x must be non-empty
  float (*max)(std::span<const float> x);
  // Σ min(x, cap)
  double (*clipped_sum)(std::span<const double> x, double cap);
  // ‖a - b‖²; a and b have equal length
  double (*squared_distance)(std::span<const double> a,
                             std::span<const double> b);
  // y += alpha * x; x and y have equal length
  void (*axpy)(double alpha, std::span<const float> x, std::span<double> y);
  // Median of a non-empty, NaN-free x; the midpoint of the two middle order
  // statistics for even sizes. Up to kRankCountLimit values it counts ranks
  // (branch-free, on a stack buffer); larger inputs fall back to selection.
  double (*median)(std::span<const float> x);
  // -Σ p·log p over x > 0 with p = x / total; total > 0
  double (*entropy)(std::span<const float> x, double total);
};

// Kernels chosen for this process (resolved once, thread-safe).
const KernelTable& active();

// Specific table, or nullptr when the ISA is not compiled in or the CPU
// lacks it. kScalar is always available.
const KernelTable* table_for(Isa isa) noexcept;

namespace scalar {
extern const KernelTable kTable;
// Copy-and-select median used by every table above kRankCountLimit.
double median_by_selection(std::span<const float> x);
}

#if defined(CATALYST_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace catalyst::kernels
