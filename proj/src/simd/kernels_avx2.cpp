// AVX2 variants. Compiled with -mavx2 -ffp-contract=off; only reached after
// a runtime CPU check in dispatch.cpp.

#include <immintrin.h>

#include <cmath>

#include "monobox/simd/kernels.hpp"

namespace monobox::simd {
namespace {

void project_points_avx2(const Projection34& p, const double* xs, const double* ys,
                         const double* zs, std::size_t n, double* us, double* vs,
                         double* depths) {
  const double* m = p.m;
  __m256d mv[12];
  for (int k = 0; k < 12; ++k) mv[k] = _mm256_set1_pd(m[k]);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(xs + i);
    const __m256d y = _mm256_loadu_pd(ys + i);
    const __m256d z = _mm256_loadu_pd(zs + i);
    __m256d q[3];
    for (int r = 0; r < 3; ++r) {
      __m256d acc = _mm256_add_pd(_mm256_mul_pd(mv[4 * r], x), _mm256_mul_pd(mv[4 * r + 1], y));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(mv[4 * r + 2], z));
      q[r] = _mm256_add_pd(acc, mv[4 * r + 3]);
    }
    _mm256_storeu_pd(us + i, _mm256_div_pd(q[0], q[2]));
    _mm256_storeu_pd(vs + i, _mm256_div_pd(q[1], q[2]));
    _mm256_storeu_pd(depths + i, q[2]);
  }
  for (; i < n; ++i) {
    const double x = xs[i], y = ys[i], z = zs[i];
    const double q0 = ((m[0] * x + m[1] * y) + m[2] * z) + m[3];
    const double q1 = ((m[4] * x + m[5] * y) + m[6] * z) + m[7];
    const double q2 = ((m[8] * x + m[9] * y) + m[10] * z) + m[11];
    us[i] = q0 / q2;
    vs[i] = q1 / q2;
    depths[i] = q2;
  }
}

struct FrameV {
  __m256d cx, cy, cz, c, s, hw, hh, hl;
  explicit FrameV(const BoxFrame& f)
      : cx(_mm256_set1_pd(f.cx)), cy(_mm256_set1_pd(f.cy)), cz(_mm256_set1_pd(f.cz)),
        c(_mm256_set1_pd(f.cos_t)), s(_mm256_set1_pd(f.sin_t)), hw(_mm256_set1_pd(f.half_w)),
        hh(_mm256_set1_pd(f.half_h)), hl(_mm256_set1_pd(f.half_l)) {}
};

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

inline __m256d inside_mask(const FrameV& f, __m256d x, __m256d y, __m256d z) {
  const __m256d dx = _mm256_sub_pd(x, f.cx);
  const __m256d dy = _mm256_sub_pd(y, f.cy);
  const __m256d dz = _mm256_sub_pd(z, f.cz);
  const __m256d lx = _mm256_sub_pd(_mm256_mul_pd(f.c, dx), _mm256_mul_pd(f.s, dz));
  const __m256d lz = _mm256_add_pd(_mm256_mul_pd(f.s, dx), _mm256_mul_pd(f.c, dz));
  __m256d m = _mm256_cmp_pd(abs_pd(lx), f.hw, _CMP_LE_OQ);
  m = _mm256_and_pd(m, _mm256_cmp_pd(abs_pd(dy), f.hh, _CMP_LE_OQ));
  return _mm256_and_pd(m, _mm256_cmp_pd(abs_pd(lz), f.hl, _CMP_LE_OQ));
}

inline bool inside_scalar(const BoxFrame& f, double x, double y, double z) {
  const double dx = x - f.cx;
  const double dy = y - f.cy;
  const double dz = z - f.cz;
  const double lx = f.cos_t * dx - f.sin_t * dz;
  const double lz = f.sin_t * dx + f.cos_t * dz;
  return std::fabs(lx) <= f.half_w && std::fabs(dy) <= f.half_h && std::fabs(lz) <= f.half_l;
}

InsideCounts count_inside_avx2(const BoxFrame& a, const BoxFrame& b, const double* xs,
                               const double* ys, const double* zs, std::size_t n) {
  const FrameV fa(a), fb(b);
  InsideCounts c;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(xs + i);
    const __m256d y = _mm256_loadu_pd(ys + i);
    const __m256d z = _mm256_loadu_pd(zs + i);
    const __m256d ma = inside_mask(fa, x, y, z);
    const __m256d mb = inside_mask(fb, x, y, z);
    const int ba = _mm256_movemask_pd(ma);
    const int bb = _mm256_movemask_pd(mb);
    c.in_a += static_cast<std::uint64_t>(__builtin_popcount(static_cast<unsigned>(ba)));
    c.in_b += static_cast<std::uint64_t>(__builtin_popcount(static_cast<unsigned>(bb)));
    c.in_both += static_cast<std::uint64_t>(__builtin_popcount(static_cast<unsigned>(ba & bb)));
  }
  for (; i < n; ++i) {
    const bool ia = inside_scalar(a, xs[i], ys[i], zs[i]);
    const bool ib = inside_scalar(b, xs[i], ys[i], zs[i]);
    c.in_a += ia;
    c.in_b += ib;
    c.in_both += (ia && ib);
  }
  return c;
}

double weighted_sq_norm_avx2(const double* y, const double* f, const double* w,
                             std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_mul_pd(
        _mm256_loadu_pd(w + i), _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(f + i)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(r, r));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  for (; i < n; ++i) {
    const double r = w[i] * (y[i] - f[i]);
    s[i % 4] += r * r;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{Isa::kAvx2, "avx2", &project_points_avx2, &count_inside_avx2,
                                 &weighted_sq_norm_avx2};
  return table;
}

}  // namespace monobox::simd
