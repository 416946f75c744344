#pragma once
// Data-parallel inner loops with a scalar reference and ISA-specific variants.
//
// Every variant must produce bit-identical results to the scalar reference
// (the vector translation units are compiled with -ffp-contract=off and use
// the same operation order). This header is included from the AVX2 TU, so it
// must stay free of Eigen and other heavy inline templates.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace monobox::simd {

/// Row-major 3x4 projection matrix.
struct Projection34 {
  double m[12];
};

/// An upright box expressed for point-membership tests: center, yaw as
/// (cos, sin), and half extents along the local x (width), y (height) and
/// z (length) axes.
struct BoxFrame {
  double cx, cy, cz;
  double cos_t, sin_t;
  double half_w, half_h, half_l;
};

struct InsideCounts {
  std::uint64_t in_a = 0;
  std::uint64_t in_b = 0;
  std::uint64_t in_both = 0;
};

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;
  // us[i], vs[i] = dehomogenized P*(x,y,z,1); depths[i] = third component.
  // Points with depth == 0 yield inf/nan pixels; callers validate depths.
  void (*project_points)(const Projection34& p, const double* xs, const double* ys,
                         const double* zs, std::size_t n, double* us, double* vs,
                         double* depths);
  InsideCounts (*count_inside)(const BoxFrame& a, const BoxFrame& b, const double* xs,
                               const double* ys, const double* zs, std::size_t n);
  // sum_i (w_i * (y_i - f_i))^2, accumulated in 4 interleaved partial sums
  // (lane i % 4), then combined as (s0 + s1) + (s2 + s3).
  double (*weighted_sq_norm)(const double* y, const double* f, const double* w,
                             std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();

/// Best available table. Honors MONOBOX_SIMD=scalar in the environment.
const KernelTable& active_kernels();

// Convenience wrappers over active_kernels().
void project_points(const Projection34& p, std::span<const double> xs,
                    std::span<const double> ys, std::span<const double> zs,
                    std::span<double> us, std::span<double> vs, std::span<double> depths);

InsideCounts count_inside(const BoxFrame& a, const BoxFrame& b, std::span<const double> xs,
                          std::span<const double> ys, std::span<const double> zs);

double weighted_sq_norm(std::span<const double> y, std::span<const double> f,
                        std::span<const double> w);

}  // namespace monobox::simd
