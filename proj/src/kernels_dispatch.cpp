#include <atomic>
#include <cstdlib>

#include "pvc/common.hpp"
#include "pvc/kernels.hpp"

namespace pvc::kern {

const Kernels* avx2_table();  // defined in kernels_avx2.cpp, null off-x86

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* avx2() { return avx2_supported() ? avx2_table() : nullptr; }

namespace {

std::atomic<const Kernels*> g_active{nullptr};

const Kernels* pick_auto() {
  if (const Kernels* t = avx2()) return t;
  return &scalar();
}

const Kernels* pick(const std::string& name) {
  if (name == "auto") return pick_auto();
  if (name == "scalar") return &scalar();
  if (name == "avx2") {
    const Kernels* t = avx2();
    if (!t) throw ConfigError("kernel backend 'avx2' is not available on this CPU");
    return t;
  }
  throw ConfigError("unknown kernel backend '" + name + "' (expected scalar, avx2 or auto)");
}

}  // namespace

const Kernels& active() {
  const Kernels* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    const char* env = std::getenv("PVC_KERNELS");
    t = pick(env ? env : "auto");
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(const std::string& name) {
  g_active.store(pick(name), std::memory_order_release);
}

}  // namespace pvc::kern
