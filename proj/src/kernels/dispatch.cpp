#include <atomic>
#include <cstdlib>

#include "c2g/kernels.hpp"

namespace c2g::kernels {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* pick() {
  const char* env = std::getenv("C2G_FORCE_SCALAR");
  if (env && env[0] == '1') return &scalar_table();
  if (cpu_has_avx2()) return &avx2_table();
  return &scalar_table();
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = pick();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

const char* active_name() { return active().name; }

void force_scalar(bool on) {
  g_active.store(on ? &scalar_table() : pick(), std::memory_order_release);
}

}  // namespace c2g::kernels
