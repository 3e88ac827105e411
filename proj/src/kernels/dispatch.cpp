#include <cstdlib>
#include <string_view>

#include "catalyst/kernels.hpp"

namespace catalyst::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(CATALYST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& resolve() {
  const char* forced = std::getenv("CATALYST_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") {
    return scalar::kTable;
  }
  if (const KernelTable* t = table_for(Isa::kAvx2)) return *t;
  return scalar::kTable;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return &scalar::kTable;
    case Isa::kAvx2:
#if defined(CATALYST_HAVE_AVX2)
      if (cpu_has_avx2()) return &avx2::kTable;
#endif
      return nullptr;
  }
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace catalyst::kernels
