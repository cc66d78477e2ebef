#include <atomic>
#include <cstdlib>
#include <string>

#include "tkg/kernels/kernels.hpp"

namespace tkg::kernels {

#if defined(TKG_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(TKG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_selection() {
  const char* forced = std::getenv("TKG_KERNELS");
  if (forced != nullptr && std::string(forced) == "scalar") return &scalar_kernels();
  if (const KernelTable* simd = avx2_kernels()) return simd;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_selection()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(TKG_HAVE_AVX2)
  static const bool available = cpu_has_avx2();
  return available ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Backend backend) {
  if (backend == Backend::Scalar) {
    current().store(&scalar_kernels());
    return true;
  }
  const KernelTable* simd = avx2_kernels();
  if (simd == nullptr) return false;
  current().store(simd);
  return true;
}

}  // namespace tkg::kernels
