#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "monobox/simd/kernels.hpp"

namespace monobox::simd {

#if defined(MONOBOX_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(MONOBOX_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable* table = [] {
    const char* env = std::getenv("MONOBOX_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
  }();
  return *table;
}

namespace {
void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("simd kernel: mismatched span lengths");
}
}  // namespace

void project_points(const Projection34& p, std::span<const double> xs,
                    std::span<const double> ys, std::span<const double> zs,
                    std::span<double> us, std::span<double> vs, std::span<double> depths) {
  const std::size_t n = xs.size();
  require_same_size(n, ys.size());
  require_same_size(n, zs.size());
  require_same_size(n, us.size());
  require_same_size(n, vs.size());
  require_same_size(n, depths.size());
  active_kernels().project_points(p, xs.data(), ys.data(), zs.data(), n, us.data(), vs.data(),
                                  depths.data());
}

InsideCounts count_inside(const BoxFrame& a, const BoxFrame& b, std::span<const double> xs,
                          std::span<const double> ys, std::span<const double> zs) {
  require_same_size(xs.size(), ys.size());
  require_same_size(xs.size(), zs.size());
  return active_kernels().count_inside(a, b, xs.data(), ys.data(), zs.data(), xs.size());
}

double weighted_sq_norm(std::span<const double> y, std::span<const double> f,
                        std::span<const double> w) {
  require_same_size(y.size(), f.size());
  require_same_size(y.size(), w.size());
  return active_kernels().weighted_sq_norm(y.data(), f.data(), w.data(), y.size());
}

}  // namespace monobox::simd
