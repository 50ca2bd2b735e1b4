#include "steer/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace steer::kern {

bool avx2_supported() {
#if defined(STEER_BUILD_AVX2) && (defined(__x86_64__) || defined(_M_X64)) && \
    defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

struct Selection {
  const Ops* table;
  const char* name;
};

Selection select() {
  const char* env = std::getenv("STEER_KERNELS");
  if (env && std::strcmp(env, "scalar") == 0) return {&scalar_ops(), "scalar"};
#if defined(STEER_BUILD_AVX2) && (defined(__x86_64__) || defined(_M_X64))
  if (env && std::strcmp(env, "avx2") == 0) return {&avx2_ops(), "avx2"};
  if (avx2_supported()) return {&avx2_ops(), "avx2"};
#endif
  return {&scalar_ops(), "scalar"};
}

const Selection& selection() {
  static const Selection s = select();
  return s;
}

}  // namespace

const Ops& ops() { return *selection().table; }
const char* active_isa() { return selection().name; }

}  // namespace steer::kern
