#pragma once
// Boxes, cameras and overlap measures.
//
// Frame convention: camera coordinates with x right, y down, z forward.
// An upright box is rotated by yaw theta about the camera y axis. In the box
// frame the width spans x, the height spans y and the length spans z.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace monobox {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

inline constexpr int kBoxParams = 7;
using BoxVector = Eigen::Matrix<double, kBoxParams, 1>;
using BoxMatrix = Eigen::Matrix<double, kBoxParams, kBoxParams>;

/// Minimum homogeneous depth for a point to count as projectable (meters).
inline constexpr double kMinDepth = 1e-6;

/// Wraps an angle to (-pi, pi].
double normalize_angle(double angle);

/// Index layout of BoxVector.
namespace box_index {
inline constexpr int kH = 0, kW = 1, kL = 2, kX = 3, kY = 4, kZ = 5, kTheta = 6;
}

/// Upright 3D box: dimensions (h, w, l), center (x, y, z) and yaw theta.
struct Box3D {
  double h = 1.0, w = 1.0, l = 1.0;
  double x = 0.0, y = 0.0, z = 0.0;
  double theta = 0.0;

  Vec3 center() const { return {x, y, z}; }
  double volume() const { return h * w * l; }
  bool has_positive_dims() const { return h > 0.0 && w > 0.0 && l > 0.0; }

  BoxVector params() const;
  static Box3D from_params(const BoxVector& p);

  bool operator==(const Box3D&) const = default;
};

/// Axis-aligned image rectangle (x1, y1) top-left, (x2, y2) bottom-right.
struct Box2D {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() > 0.0 && height() > 0.0 ? width() * height() : 0.0; }
  Vec2 center() const { return {0.5 * (x1 + x2), 0.5 * (y1 + y2)}; }

  bool operator==(const Box2D&) const = default;
};

/// Pinhole camera described by a 3x4 projection matrix P = [M | p4].
class Camera {
 public:
  /// Throws Error(kInvalidArgument) if the left 3x3 block is singular.
  explicit Camera(const Mat34& projection);

  /// P = [I | 0].
  static Camera identity();
  /// Canonical camera K = [[f, 0, cx], [0, f, cy], [0, 0, 1]], zero translation.
  static Camera from_intrinsics(double focal, double cx, double cy);

  const Mat34& projection() const { return projection_; }
  Mat3 intrinsics() const { return projection_.leftCols<3>(); }
  const Mat3& intrinsics_inverse() const { return intrinsics_inverse_; }
  /// Optical center in the camera frame: -M^{-1} p4.
  Vec3 optical_center() const { return optical_center_; }

 private:
  Mat34 projection_;
  Mat3 intrinsics_inverse_;
  Vec3 optical_center_;
};

/// Homogeneous depth of a point, i.e. the third component of P (X, 1).
double point_depth(const Camera& camera, const Vec3& point);

/// Projects a point; throws Error(kDepthTooSmall) when depth <= kMinDepth.
Vec2 project_point(const Camera& camera, const Vec3& point);

/// Yaw rotation about the y axis.
Mat3 rotation_y(double theta);

/// Sign vector of corner j: bit 2 -> v1, bit 1 -> v2, bit 0 -> v3, 0 -> -1, 1 -> +1.
Vec3 unit_corner(int j);

/// The 8 corners, ordered by binary counting over the unit-cube sign vector.
std::array<Vec3, 8> box_corners(const Box3D& box);

/// Axis-aligned IoU; 0 when either box has zero area.
double iou_2d(const Box2D& a, const Box2D& b);

/// Bird's-eye-view (x-z plane) footprint, counter-clockwise in (x, z).
std::array<Vec2, 4> bev_footprint(const Box3D& box);

/// Convex polygon clipping; subject is clipped against the half-planes of the
/// convex clip polygon. Both may be in either orientation.
std::vector<Vec2> clip_convex_polygon(const std::vector<Vec2>& subject,
                                      const std::vector<Vec2>& clip);

/// Signed shoelace area (positive for counter-clockwise).
double polygon_area(const std::vector<Vec2>& polygon);

/// Area of the overlap of two BEV footprints.
double bev_intersection_area(const Box3D& a, const Box3D& b);

double iou_bev(const Box3D& a, const Box3D& b);

/// Oriented 3D IoU of two upright boxes; 0 for degenerate inputs.
double iou_3d(const Box3D& a, const Box3D& b);

/// Intersection volume of two upright boxes.
double intersection_volume(const Box3D& a, const Box3D& b);

/// Gradient of iou_3d with respect to the parameters of `a`, computed by
/// forward-mode automatic differentiation through the clipping routine.
BoxVector iou_3d_gradient_autodiff(const Box3D& a, const Box3D& b);

/// Tight image rectangle around the 8 projected corners. Throws
/// Error(kDepthTooSmall) if any corner is not in front of the camera.
Box2D projected_envelope(const Camera& camera, const Box3D& box);

/// Monte-Carlo IoU estimate by uniform sampling of the joint bounding region.
/// Independent of the polygon-clipping path; used as a verification oracle.
struct MonteCarloIou {
  double iou = 0.0;
  double intersection_volume = 0.0;
  std::uint64_t samples = 0;
};
MonteCarloIou monte_carlo_iou(const Box3D& a, const Box3D& b, std::uint64_t samples,
                              std::uint64_t seed);

}  // namespace monobox
