#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <vector>

#include "monobox/simd/kernels.hpp"

using namespace monobox::simd;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

class SimdEquivalence : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override {
    avx2_ = avx2_kernels();
    if (avx2_ == nullptr) GTEST_SKIP() << "AVX2 variant unavailable on this host";
  }
  const KernelTable* avx2_ = nullptr;
};

TEST_P(SimdEquivalence, ProjectPointsBitIdentical) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 1);
  Projection34 p{};
  const auto m = uniform(rng, 12, -2.0, 2.0);
  for (int i = 0; i < 12; ++i) p.m[i] = m[i];
  const auto xs = uniform(rng, n, -10, 10), ys = uniform(rng, n, -3, 3), zs = uniform(rng, n, 1, 50);
  std::vector<double> u0(n), v0(n), d0(n), u1(n), v1(n), d1(n);
  scalar_kernels().project_points(p, xs.data(), ys.data(), zs.data(), n, u0.data(), v0.data(), d0.data());
  avx2_->project_points(p, xs.data(), ys.data(), zs.data(), n, u1.data(), v1.data(), d1.data());
  for (std::size_t i = 0; i < n; ++i) {
    ASSERT_TRUE(same_bits(u0[i], u1[i])) << i;
    ASSERT_TRUE(same_bits(v0[i], v1[i])) << i;
    ASSERT_TRUE(same_bits(d0[i], d1[i])) << i;
  }
}

TEST_P(SimdEquivalence, CountInsideIdentical) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 7);
  const BoxFrame a{0.1, 0.2, 10.0, std::cos(0.3), std::sin(0.3), 0.8, 0.75, 2.0};
  const BoxFrame b{0.6, 0.1, 10.5, std::cos(-1.1), std::sin(-1.1), 0.9, 0.8, 1.7};
  const auto xs = uniform(rng, n, -3, 3), ys = uniform(rng, n, -1.5, 1.5), zs = uniform(rng, n, 7, 13);
  const InsideCounts c0 = scalar_kernels().count_inside(a, b, xs.data(), ys.data(), zs.data(), n);
  const InsideCounts c1 = avx2_->count_inside(a, b, xs.data(), ys.data(), zs.data(), n);
  EXPECT_EQ(c0.in_a, c1.in_a);
  EXPECT_EQ(c0.in_b, c1.in_b);
  EXPECT_EQ(c0.in_both, c1.in_both);
}

TEST_P(SimdEquivalence, WeightedSqNormBitIdentical) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 13);
  const auto y = uniform(rng, n, -100, 100), f = uniform(rng, n, -100, 100), w = uniform(rng, n, 0.01, 10);
  const double s0 = scalar_kernels().weighted_sq_norm(y.data(), f.data(), w.data(), n);
  const double s1 = avx2_->weighted_sq_norm(y.data(), f.data(), w.data(), n);
  EXPECT_TRUE(same_bits(s0, s1)) << s0 << " vs " << s1;
}

INSTANTIATE_TEST_SUITE_P(Lengths, SimdEquivalence,
                         ::testing::Values(0, 1, 3, 4, 5, 7, 8, 26, 1023, 4096));

}  // namespace

TEST(SimdDispatch, BoundaryPointsCountedInside) {
  // Points exactly on a face count as inside in both variants.
  const BoxFrame a{0, 0, 0, 1, 0, 1, 1, 1};
  const double xs[] = {1.0, -1.0, 0.0, 1.0 + 1e-12};
  const double ys[] = {0.0, 1.0, -1.0, 0.0};
  const double zs[] = {0.0, 0.0, 1.0, 0.0};
  const InsideCounts c = scalar_kernels().count_inside(a, a, xs, ys, zs, 4);
  EXPECT_EQ(c.in_a, 3u);
  if (const KernelTable* v = avx2_kernels()) {
    EXPECT_EQ(v->count_inside(a, a, xs, ys, zs, 4).in_a, 3u);
  }
}

TEST(SimdDispatch, EnvironmentOverrideSelectsScalar) {
  const char* env = std::getenv("MONOBOX_SIMD");
  const KernelTable& active = active_kernels();
  if (env != nullptr && std::string_view(env) == "scalar") {
    EXPECT_EQ(active.isa, Isa::kScalar);
  } else if (avx2_kernels() != nullptr) {
    EXPECT_EQ(active.isa, Isa::kAvx2);
  } else {
    EXPECT_EQ(active.isa, Isa::kScalar);
  }
}

TEST(SimdDispatch, WrappersRejectMismatchedSpans) {
  std::vector<double> a(3), b(4);
  EXPECT_THROW(weighted_sq_norm(a, b, a), std::invalid_argument);
}
