#include "monobox/simd/kernels.hpp"

#include <cmath>

namespace monobox::simd {
namespace {

void project_points_scalar(const Projection34& p, const double* xs, const double* ys,
                           const double* zs, std::size_t n, double* us, double* vs,
                           double* depths) {
  const double* m = p.m;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i], y = ys[i], z = zs[i];
    const double q0 = ((m[0] * x + m[1] * y) + m[2] * z) + m[3];
    const double q1 = ((m[4] * x + m[5] * y) + m[6] * z) + m[7];
    const double q2 = ((m[8] * x + m[9] * y) + m[10] * z) + m[11];
    us[i] = q0 / q2;
    vs[i] = q1 / q2;
    depths[i] = q2;
  }
}

inline bool inside(const BoxFrame& f, double x, double y, double z) {
  const double dx = x - f.cx;
  const double dy = y - f.cy;
  const double dz = z - f.cz;
  const double lx = f.cos_t * dx - f.sin_t * dz;
  const double lz = f.sin_t * dx + f.cos_t * dz;
  return std::fabs(lx) <= f.half_w && std::fabs(dy) <= f.half_h && std::fabs(lz) <= f.half_l;
}

InsideCounts count_inside_scalar(const BoxFrame& a, const BoxFrame& b, const double* xs,
                                 const double* ys, const double* zs, std::size_t n) {
  InsideCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    const bool ia = inside(a, xs[i], ys[i], zs[i]);
    const bool ib = inside(b, xs[i], ys[i], zs[i]);
    c.in_a += ia;
    c.in_b += ib;
    c.in_both += (ia && ib);
  }
  return c;
}

double weighted_sq_norm_scalar(const double* y, const double* f, const double* w,
                               std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double r = w[i] * (y[i] - f[i]);
    s[i % 4] += r * r;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::kScalar, "scalar", &project_points_scalar,
                                 &count_inside_scalar, &weighted_sq_norm_scalar};
  return table;
}

}  // namespace monobox::simd
