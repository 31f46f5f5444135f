#include <atomic>
#include <cstdlib>
#include <string>

#include "hybrid/error.hpp"
#include "hybrid/kernels.hpp"

namespace hybrid::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar, &scalar::dot, &scalar::squared_norm, &scalar::dot_rows};
#if defined(HYBRID_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, &avx2::dot, &avx2::squared_norm, &avx2::dot_rows};
#endif
#if defined(HYBRID_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon, &neon::dot, &neon::squared_norm, &neon::dot_rows};
#endif

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view text) {
  if (text == "scalar") return Isa::scalar;
  if (text == "avx2") return Isa::avx2;
  if (text == "neon") return Isa::neon;
  throw ConfigError("unknown kernel '" + std::string(text) + "'");
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(HYBRID_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(HYBRID_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) {
    throw ConfigError("kernel '" + std::string(name(isa)) + "' is not available on this machine");
  }
  switch (isa) {
#if defined(HYBRID_HAVE_AVX2)
    case Isa::avx2: return kAvx2;
#endif
#if defined(HYBRID_HAVE_NEON)
    case Isa::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

Isa detect() {
  if (const char* forced = std::getenv("HYBRID_KERNEL"); forced && *forced) {
    const Isa isa = parse_isa(forced);
    if (supported(isa)) return isa;
  }
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const KernelTable& active() {
  const KernelTable* current = g_active.load(std::memory_order_acquire);
  if (current) return *current;
  const KernelTable* chosen = &table(detect());
  g_active.compare_exchange_strong(current, chosen, std::memory_order_acq_rel);
  return *g_active.load(std::memory_order_acquire);
}

void select(Isa isa) { g_active.store(&table(isa), std::memory_order_release); }

}  // namespace hybrid::kernels
