#pragma once
// Surrogate regression targets: the 26 image-domain quantities regressed per
// output pixel instead of the box parameters themselves.
//
//   [0..3]   delta to the 2D box edges (x - x1, y - y1, x2 - x, y2 - y), pixels
//   [4]      distance from the camera origin to the box center, meters
//   [5..6]   (sin alpha, cos alpha), alpha = theta - atan2(x_c, z_c)
//   [7..9]   (log h, log w, log l)
//   [10..25] projected corner j minus anchor pixel, (dx_j, dy_j) pairs

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "monobox/geometry.hpp"

namespace monobox {

inline constexpr int kNumTargets = 26;
using TargetArray = Eigen::Matrix<double, kNumTargets, 1>;
using TargetJacobian = Eigen::Matrix<double, kNumTargets, kBoxParams>;

namespace target_index {
inline constexpr int kDeltaC = 0;
inline constexpr int kDistance = 4;
inline constexpr int kSinAlpha = 5;
inline constexpr int kCosAlpha = 6;
inline constexpr int kLogDims = 7;
inline constexpr int kCorners = 10;
}  // namespace target_index

/// The anchor (output) pixel p and the camera the targets refer to.
struct TargetContext {
  Vec2 pixel = Vec2::Zero();
  Camera camera = Camera::identity();
};

/// Regressed values, their standard deviations and the context.
struct TargetVector {
  TargetArray y = TargetArray::Zero();
  TargetArray sigma = TargetArray::Ones();
  TargetContext context;
};

/// Observation angle theta - atan2(x_c, z_c), wrapped to (-pi, pi].
double observation_angle(const Box3D& box);

/// Forward encoding with an externally supplied 2D box (e.g. from labels).
TargetArray encode(const Box3D& box, const Box2D& box2d, const TargetContext& ctx);

/// Model function f(b): encode() with the 2D box taken as the projected
/// envelope. When `jacobian` is given it receives df/db (26 x 7); rows 0..3
/// follow the corner that currently attains each envelope extreme.
TargetArray residual_targets(const Box3D& box, const TargetContext& ctx,
                             TargetJacobian* jacobian = nullptr);

/// 2D box implied by the anchor pixel and the delta targets.
Box2D decode_box2d(const TargetArray& y, const Vec2& pixel);

/// Projected corner j implied by the anchor pixel and the corner targets.
Vec2 decode_corner(const TargetArray& y, const Vec2& pixel, int j);

/// Rectangle of output pixels at the center of a 2D box carrying the
/// object's targets. `rect` is in input pixels; the cell range is on the
/// output grid (input / stride), half-open [x_begin, x_end).
struct SupportRegion {
  Box2D rect;
  int x_begin = 0, x_end = 0;
  int y_begin = 0, y_end = 0;
  int object_id = -1;

  int cell_count() const { return (x_end - x_begin) * (y_end - y_begin); }
  bool contains_cell(int cx, int cy) const {
    return cx >= x_begin && cx < x_end && cy >= y_begin && cy < y_end;
  }
};

inline constexpr double kSupportFraction = 0.2;
inline constexpr double kOutputStride = 4.0;

SupportRegion support_region(const Box2D& box2d, int object_id = -1,
                             double stride = kOutputStride);

/// Input-pixel coordinate of an output cell's center.
Vec2 cell_center(int cx, int cy, double stride = kOutputStride);

/// Ownership raster over a grid_w x grid_h output grid: each cell holds the
/// object_id of the closest (smallest distance) object whose region covers it,
/// or -1. `distances` is parallel to `regions`.
std::vector<int> rasterize_support_regions(const std::vector<SupportRegion>& regions,
                                           const std::vector<double>& distances, int grid_w,
                                           int grid_h);

}  // namespace monobox
