#include <atomic>
#include <cstdlib>
#include <string>

#include "hierlab/error.hpp"
#include "hierlab/kernels.hpp"

namespace hierlab::kernels {

#ifndef HIERLAB_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(HIERLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const char* forced = std::getenv("HIERLAB_KERNELS");
  const bool avx2_ok = cpu_has_avx2() && avx2_table() != nullptr;
  if (forced != nullptr) {
    const std::string want(forced);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_ok) return avx2_table();
  }
  return avx2_ok ? avx2_table() : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{initial_table()};
  return ptr;
}

}  // namespace

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::kScalar};
  if (cpu_has_avx2() && avx2_table() != nullptr) out.push_back(Backend::kAvx2);
  return out;
}

const KernelTable& table(Backend backend) {
  if (backend == Backend::kScalar) return scalar_table();
  if (!(cpu_has_avx2() && avx2_table() != nullptr)) throw InputError("kernels: avx2 backend unavailable");
  return *avx2_table();
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Backend backend) { current().store(&table(backend), std::memory_order_release); }

std::string_view backend_name(Backend backend) { return backend == Backend::kScalar ? "scalar" : "avx2"; }

}  // namespace hierlab::kernels
