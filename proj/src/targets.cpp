#include "monobox/targets.hpp"

#include <cmath>
#include <limits>

#include "monobox/errors.hpp"
#include "monobox/simd/kernels.hpp"

namespace monobox {
namespace {

struct ProjectedCorners {
  std::array<Vec3, 8> points;
  double u[8], v[8], depth[8];
};

ProjectedCorners project_corners(const Box3D& box, const Camera& camera) {
  ProjectedCorners pc;
  pc.points = box_corners(box);
  double xs[8], ys[8], zs[8];
  for (int j = 0; j < 8; ++j) {
    xs[j] = pc.points[j].x();
    ys[j] = pc.points[j].y();
    zs[j] = pc.points[j].z();
  }
  simd::Projection34 p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) p.m[4 * r + c] = camera.projection()(r, c);
  simd::active_kernels().project_points(p, xs, ys, zs, 8, pc.u, pc.v, pc.depth);
  for (int j = 0; j < 8; ++j) {
    if (!(pc.depth[j] > kMinDepth)) {
      throw Error(ErrorCode::kDepthTooSmall, "box corner " + std::to_string(j) +
                                                 " has depth " + std::to_string(pc.depth[j]));
    }
  }
  return pc;
}

void fill_common(const Box3D& box, const TargetContext& ctx, const ProjectedCorners& pc,
                 TargetArray& y) {
  using namespace target_index;
  y[kDistance] = box.center().norm();
  const double alpha = box.theta - std::atan2(box.x, box.z);
  y[kSinAlpha] = std::sin(alpha);
  y[kCosAlpha] = std::cos(alpha);
  y[kLogDims + 0] = std::log(box.h);
  y[kLogDims + 1] = std::log(box.w);
  y[kLogDims + 2] = std::log(box.l);
  for (int j = 0; j < 8; ++j) {
    y[kCorners + 2 * j] = pc.u[j] - ctx.pixel.x();
    y[kCorners + 2 * j + 1] = pc.v[j] - ctx.pixel.y();
  }
}

void fill_delta_c(const Box2D& b, const Vec2& p, TargetArray& y) {
  y[0] = p.x() - b.x1;
  y[1] = p.y() - b.y1;
  y[2] = b.x2 - p.x();
  y[3] = b.y2 - p.y();
}

}  // namespace

double observation_angle(const Box3D& box) {
  return normalize_angle(box.theta - std::atan2(box.x, box.z));
}

TargetArray encode(const Box3D& box, const Box2D& box2d, const TargetContext& ctx) {
  const ProjectedCorners pc = project_corners(box, ctx.camera);
  TargetArray y;
  fill_delta_c(box2d, ctx.pixel, y);
  fill_common(box, ctx, pc, y);
  return y;
}

TargetArray residual_targets(const Box3D& box, const TargetContext& ctx,
                             TargetJacobian* jacobian) {
  using namespace target_index;
  const ProjectedCorners pc = project_corners(box, ctx.camera);

  int jmin_u = 0, jmax_u = 0, jmin_v = 0, jmax_v = 0;
  for (int j = 1; j < 8; ++j) {
    if (pc.u[j] < pc.u[jmin_u]) jmin_u = j;
    if (pc.u[j] > pc.u[jmax_u]) jmax_u = j;
    if (pc.v[j] < pc.v[jmin_v]) jmin_v = j;
    if (pc.v[j] > pc.v[jmax_v]) jmax_v = j;
  }
  const Box2D env{pc.u[jmin_u], pc.v[jmin_v], pc.u[jmax_u], pc.v[jmax_v]};
  TargetArray y;
  fill_delta_c(env, ctx.pixel, y);
  fill_common(box, ctx, pc, y);
  if (jacobian == nullptr) return y;

  TargetJacobian& jac = *jacobian;
  jac.setZero();

  // Projected corner derivatives, 2 x 7 each.
  const Mat3 m = ctx.camera.projection().leftCols<3>();
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  std::array<Eigen::Matrix<double, 2, kBoxParams>, 8> dcorner;
  for (int j = 0; j < 8; ++j) {
    const Vec3 sv = unit_corner(j);
    const double lx = 0.5 * box.w * sv.x();
    const double lz = 0.5 * box.l * sv.z();
    Eigen::Matrix<double, 3, kBoxParams> dx = Eigen::Matrix<double, 3, kBoxParams>::Zero();
    dx.col(box_index::kH) = Vec3(0.0, 0.5 * sv.y(), 0.0);
    dx.col(box_index::kW) = Vec3(0.5 * c * sv.x(), 0.0, -0.5 * s * sv.x());
    dx.col(box_index::kL) = Vec3(0.5 * s * sv.z(), 0.0, 0.5 * c * sv.z());
    dx.block<3, 3>(0, box_index::kX).setIdentity();
    dx.col(box_index::kTheta) = Vec3(-s * lx + c * lz, 0.0, -c * lx - s * lz);

    Eigen::Matrix<double, 2, 3> dproj;
    dproj.row(0) = (m.row(0) - pc.u[j] * m.row(2)) / pc.depth[j];
    dproj.row(1) = (m.row(1) - pc.v[j] * m.row(2)) / pc.depth[j];
    dcorner[j] = dproj * dx;
  }

  jac.row(0) = -dcorner[jmin_u].row(0);
  jac.row(1) = -dcorner[jmin_v].row(1);
  jac.row(2) = dcorner[jmax_u].row(0);
  jac.row(3) = dcorner[jmax_v].row(1);

  const double d = y[kDistance];
  jac.block<1, 3>(kDistance, box_index::kX) = box.center().transpose() / d;

  const double rho2 = box.x * box.x + box.z * box.z;
  Eigen::Matrix<double, 1, kBoxParams> dalpha = Eigen::Matrix<double, 1, kBoxParams>::Zero();
  dalpha[box_index::kX] = -box.z / rho2;
  dalpha[box_index::kZ] = box.x / rho2;
  dalpha[box_index::kTheta] = 1.0;
  jac.row(kSinAlpha) = y[kCosAlpha] * dalpha;
  jac.row(kCosAlpha) = -y[kSinAlpha] * dalpha;

  jac(kLogDims + 0, box_index::kH) = 1.0 / box.h;
  jac(kLogDims + 1, box_index::kW) = 1.0 / box.w;
  jac(kLogDims + 2, box_index::kL) = 1.0 / box.l;

  for (int j = 0; j < 8; ++j) jac.block<2, kBoxParams>(kCorners + 2 * j, 0) = dcorner[j];
  return y;
}

Box2D decode_box2d(const TargetArray& y, const Vec2& pixel) {
  return {pixel.x() - y[0], pixel.y() - y[1], pixel.x() + y[2], pixel.y() + y[3]};
}

Vec2 decode_corner(const TargetArray& y, const Vec2& pixel, int j) {
  return pixel + Vec2(y[target_index::kCorners + 2 * j], y[target_index::kCorners + 2 * j + 1]);
}

SupportRegion support_region(const Box2D& box2d, int object_id, double stride) {
  SupportRegion r;
  r.object_id = object_id;
  const Vec2 c = box2d.center();
  const double hw = 0.5 * kSupportFraction * box2d.width();
  const double hh = 0.5 * kSupportFraction * box2d.height();
  r.rect = Box2D{c.x() - hw, c.y() - hh, c.x() + hw, c.y() + hh};

  auto cells = [stride](double lo, double hi, double center, int& begin, int& end) {
    if (hi - lo < stride) {
      // Narrower than one output pixel: the single cell holding the center.
      begin = static_cast<int>(std::floor(center / stride));
      end = begin + 1;
      return;
    }
    begin = static_cast<int>(std::floor(lo / stride));
    end = static_cast<int>(std::ceil(hi / stride));
    if (end <= begin) end = begin + 1;
  };
  cells(r.rect.x1, r.rect.x2, c.x(), r.x_begin, r.x_end);
  cells(r.rect.y1, r.rect.y2, c.y(), r.y_begin, r.y_end);
  return r;
}

Vec2 cell_center(int cx, int cy, double stride) {
  return {stride * (cx + 0.5), stride * (cy + 0.5)};
}

std::vector<int> rasterize_support_regions(const std::vector<SupportRegion>& regions,
                                           const std::vector<double>& distances, int grid_w,
                                           int grid_h) {
  if (regions.size() != distances.size()) {
    throw Error(ErrorCode::kInvalidArgument, "regions and distances differ in length");
  }
  std::vector<int> owner(static_cast<std::size_t>(grid_w) * grid_h, -1);
  std::vector<double> best(owner.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const SupportRegion& r = regions[k];
    for (int cy = std::max(0, r.y_begin); cy < std::min(grid_h, r.y_end); ++cy) {
      for (int cx = std::max(0, r.x_begin); cx < std::min(grid_w, r.x_end); ++cx) {
        const std::size_t idx = static_cast<std::size_t>(cy) * grid_w + cx;
        if (distances[k] < best[idx]) {
          best[idx] = distances[k];
          owner[idx] = r.object_id;
        }
      }
    }
  }
  return owner;
}

}  // namespace monobox
