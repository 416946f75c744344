#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "monobox/errors.hpp"
#include "monobox/synth.hpp"
#include "monobox/targets.hpp"
#include "oracle.hpp"

using namespace monobox;
namespace ti = target_index;

namespace {

TargetContext kitti_context(const Box3D& b) {
  TargetContext ctx;
  ctx.camera = kitti_reference_camera();
  ctx.pixel = projected_envelope(ctx.camera, b).center() + Vec2(1.3, -0.7);
  return ctx;
}

Eigen::VectorXd oracle_f(const Box3D& b, const TargetContext& ctx) {
  const Mat34& p = ctx.camera.projection();
  const auto f = oracle::encode(b, oracle::envelope(p, b), ctx.pixel, p);
  return Eigen::Map<const Eigen::VectorXd>(f.data(), 26);
}

}  // namespace

TEST(Encode, AxisAlignedCube) {
  const Box3D b{2, 2, 2, 0, 0, 10, 0};
  TargetContext ctx;
  const TargetArray f = encode(b, projected_envelope(ctx.camera, b), ctx);
  EXPECT_DOUBLE_EQ(f[ti::kDistance], 10.0);
  EXPECT_DOUBLE_EQ(f[ti::kSinAlpha], 0.0);
  EXPECT_DOUBLE_EQ(f[ti::kCosAlpha], 1.0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(f[ti::kLogDims + k], 0.6931471805599453, 1e-15);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(f[k], 1.0 / 9.0, 1e-15);
}

TEST(Encode, ObservationAngleCancelsRayAngle) {
  const Box3D b{1.5, 1.6, 3.9, 10, 0, 10, M_PI / 4};
  TargetContext ctx;
  const TargetArray f = encode(b, projected_envelope(ctx.camera, b), ctx);
  EXPECT_NEAR(f[ti::kSinAlpha], 0.0, 1e-15);
  EXPECT_NEAR(f[ti::kCosAlpha], 1.0, 1e-15);
  EXPECT_NEAR(observation_angle(b), 0.0, 1e-15);
}

TEST(Encode, MatchesIndependentOracle) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 1000; ++i) {
    const Box3D b = oracle::random_box(rng);
    const TargetContext ctx = kitti_context(b);
    const Box2D label{b.x, b.y, b.x + 100, b.y + 50};  // any externally supplied box
    const TargetArray f = encode(b, label, ctx);
    const auto o = oracle::encode(b, label, ctx.pixel, ctx.camera.projection());
    for (int k = 0; k < kNumTargets; ++k) {
      EXPECT_NEAR(f[k], o[k], 1e-10 * std::max(1.0, std::abs(o[k]))) << "target " << k;
    }
  }
}

TEST(Encode, UnitOrientationVector) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) {
    const Box3D b = oracle::random_box(rng);
    const TargetArray f = residual_targets(b, kitti_context(b));
    EXPECT_NEAR(std::hypot(f[ti::kSinAlpha], f[ti::kCosAlpha]), 1.0, 1e-15);
  }
}

TEST(Encode, PropagatesDepthTooSmall) {
  const Box3D b{2, 2, 2, 0, 0, -5, 0};
  TargetContext ctx;
  try {
    encode(b, Box2D{0, 0, 1, 1}, ctx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDepthTooSmall);
  }
  EXPECT_THROW(residual_targets(b, ctx), Error);
}

TEST(ResidualTargets, EqualsEncodeWithEnvelope) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 200; ++i) {
    const Box3D b = oracle::random_box(rng);
    const TargetContext ctx = kitti_context(b);
    EXPECT_EQ(residual_targets(b, ctx), encode(b, projected_envelope(ctx.camera, b), ctx));
  }
}

TEST(ResidualTargets, DistanceSensitivityToDepth) {
  const Box3D b{1.5, 1.6, 3.9, 3, 1, 20, 0.3};
  const TargetContext ctx = kitti_context(b);
  const double delta = 1e-6;
  Box3D moved = b;
  moved.z += delta;
  const double d = b.center().norm();
  const double change = residual_targets(moved, ctx)[ti::kDistance] - residual_targets(b, ctx)[ti::kDistance];
  EXPECT_NEAR(change, delta * b.z / d, 1e-12);
}

TEST(ResidualTargets, PeriodicInYaw) {
  std::mt19937_64 rng(44);
  for (int i = 0; i < 200; ++i) {
    const Box3D b = oracle::random_box(rng);
    Box3D c = b;
    c.theta += 2 * M_PI;
    const TargetContext ctx = kitti_context(b);
    const TargetArray fb = residual_targets(b, ctx), fc = residual_targets(c, ctx);
    EXPECT_LT((fb - fc).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ResidualTargets, AnchorShift) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const Box3D b = oracle::random_box(rng);
    TargetContext a = kitti_context(b), c = a;
    const Vec2 d(u(rng), u(rng));
    c.pixel += d;
    const TargetArray fa = residual_targets(b, a), fc = residual_targets(b, c);
    EXPECT_NEAR(fc[0] - fa[0], d.x(), 1e-9);
    EXPECT_NEAR(fc[1] - fa[1], d.y(), 1e-9);
    EXPECT_NEAR(fc[2] - fa[2], -d.x(), 1e-9);
    EXPECT_NEAR(fc[3] - fa[3], -d.y(), 1e-9);
    for (int k = 4; k < 10; ++k) EXPECT_EQ(fc[k], fa[k]);
    for (int j = 0; j < 8; ++j) {
      EXPECT_NEAR(fc[10 + 2 * j] - fa[10 + 2 * j], -d.x(), 1e-9);
      EXPECT_NEAR(fc[11 + 2 * j] - fa[11 + 2 * j], -d.y(), 1e-9);
    }
  }
}

TEST(ResidualTargets, JacobianMatchesOracleDifferences) {
  std::mt19937_64 rng(46);
  int checked = 0;
  while (checked < 100) {
    const Box3D b = oracle::random_box(rng);
    const TargetContext ctx = kitti_context(b);
    TargetJacobian j;
    residual_targets(b, ctx, &j);
    const auto f = [&](const Eigen::VectorXd& p) { return oracle_f(Box3D::from_params(p), ctx); };
    const Eigen::VectorXd p = b.params();
    const Eigen::MatrixXd fd = oracle::fd_jacobian(f, p, 1e-6);
    // Skip configurations where an envelope extreme changes corners inside
    // the difference step.
    const Eigen::MatrixXd fd_coarse = oracle::fd_jacobian(f, p, 1e-4);
    if ((fd - fd_coarse).cwiseAbs().maxCoeff() > 1e-2 * std::max(1.0, fd.norm())) continue;
    for (int c = 0; c < kBoxParams; ++c) {
      const double scale = std::max(fd.col(c).norm(), 1e-6 * fd.norm());
      EXPECT_LT((j.col(c) - fd.col(c)).norm() / scale, 1e-5) << "param " << c;
    }
    ++checked;
  }
}

TEST(Decode, Box2DAndCornersInvertEncoding) {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 100; ++i) {
    const Box3D b = oracle::random_box(rng);
    const TargetContext ctx = kitti_context(b);
    const TargetArray f = residual_targets(b, ctx);
    const Box2D env = projected_envelope(ctx.camera, b);
    const Box2D dec = decode_box2d(f, ctx.pixel);
    EXPECT_NEAR(dec.x1, env.x1, 1e-9);
    EXPECT_NEAR(dec.y1, env.y1, 1e-9);
    EXPECT_NEAR(dec.x2, env.x2, 1e-9);
    EXPECT_NEAR(dec.y2, env.y2, 1e-9);
    const auto cs = box_corners(b);
    for (int j = 0; j < 8; ++j) {
      EXPECT_LT((decode_corner(f, ctx.pixel, j) - project_point(ctx.camera, cs[j])).norm(), 1e-9);
    }
  }
}

TEST(SupportRegion, TwentyPercentOfBox) {
  const SupportRegion r = support_region(Box2D{0, 0, 100, 50}, 3);
  EXPECT_DOUBLE_EQ(r.rect.x1, 40);
  EXPECT_DOUBLE_EQ(r.rect.x2, 60);
  EXPECT_DOUBLE_EQ(r.rect.y1, 20);
  EXPECT_DOUBLE_EQ(r.rect.y2, 30);
  EXPECT_EQ(r.object_id, 3);
  // Output grid at stride 4: floor(40/4) .. ceil(60/4), floor(20/4) .. ceil(30/4).
  EXPECT_EQ(r.x_begin, 10);
  EXPECT_EQ(r.x_end, 15);
  EXPECT_EQ(r.y_begin, 5);
  EXPECT_EQ(r.y_end, 8);
}

TEST(SupportRegion, TinyBoxIsNearestSingleCell) {
  const SupportRegion r = support_region(Box2D{101, 201, 103, 202});
  EXPECT_EQ(r.cell_count(), 1);
  EXPECT_EQ(r.x_begin, 25);  // center 102 / 4
  EXPECT_EQ(r.y_begin, 50);  // center 201.5 / 4
}

TEST(SupportRegion, CenteredAndContained) {
  std::mt19937_64 rng(48);
  std::uniform_real_distribution<double> u(0, 1000), s(1, 300);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng), y = u(rng);
    const Box2D b{x, y, x + s(rng), y + s(rng)};
    const SupportRegion r = support_region(b);
    EXPECT_LT((r.rect.center() - b.center()).norm(), 1e-9);
    EXPECT_GE(r.rect.x1, b.x1);
    EXPECT_LE(r.rect.x2, b.x2);
    EXPECT_GE(r.rect.y1, b.y1);
    EXPECT_LE(r.rect.y2, b.y2);
    EXPECT_GE(r.cell_count(), 1);
    const Vec2 c = cell_center(r.x_begin, r.y_begin);
    EXPECT_LE(c.x(), b.x2);
    EXPECT_GE(c.x() + 4.0, b.x1);
  }
}

TEST(SupportRegion, CloserObjectWinsContestedCells) {
  const SupportRegion near = support_region(Box2D{0, 0, 200, 200}, 0);
  const SupportRegion far = support_region(Box2D{20, 20, 220, 220}, 1);
  const int w = 80, h = 80;
  const auto owner = rasterize_support_regions({far, near}, {10.0, 5.0}, w, h);
  int contested = 0;
  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      const int o = owner[cy * w + cx];
      const bool in_near = near.contains_cell(cx, cy), in_far = far.contains_cell(cx, cy);
      if (in_near && in_far) {
        ++contested;
        EXPECT_EQ(o, 0);
      } else if (in_near) {
        EXPECT_EQ(o, 0);
      } else if (in_far) {
        EXPECT_EQ(o, 1);
      } else {
        EXPECT_EQ(o, -1);
      }
    }
  }
  EXPECT_GT(contested, 0);
  EXPECT_THROW(rasterize_support_regions({near}, {}, w, h), Error);
}
