#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace klon::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(KLON_HAVE_AVX2_TU)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(KLON_HAVE_NEON_TU)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("KLON_SIMD")) {
    const std::string v = env;
    if (v == "scalar") return &detail::kScalarTable;
    if (v == "avx2" && cpu_has(Isa::avx2)) return kernels_for(Isa::avx2);
    if (v == "neon" && cpu_has(Isa::neon)) return kernels_for(Isa::neon);
  }
  return kernels_for(best_isa());
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* kernels_for(Isa isa) {
  if (!cpu_has(isa)) return nullptr;
  switch (isa) {
    case Isa::scalar:
      return &detail::kScalarTable;
    case Isa::avx2:
#if defined(KLON_HAVE_AVX2_TU)
      return &detail::kAvx2Table;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(KLON_HAVE_NEON_TU)
      return &detail::kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Isa best_isa() {
  if (cpu_has(Isa::avx2)) return Isa::avx2;
  if (cpu_has(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

bool set_active_isa(Isa isa) {
  const KernelTable* t = kernels_for(isa);
  if (t == nullptr) return false;
  active().store(t, std::memory_order_release);
  return true;
}

Isa active_isa() { return kernels().isa; }

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

}  // namespace klon::simd
