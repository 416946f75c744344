#include "monobox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>
#include <unsupported/Eigen/AutoDiff>

#include "monobox/errors.hpp"
#include "monobox/simd/kernels.hpp"

namespace monobox {

double normalize_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

BoxVector Box3D::params() const {
  BoxVector p;
  p << h, w, l, x, y, z, theta;
  return p;
}

Box3D Box3D::from_params(const BoxVector& p) {
  return Box3D{p[0], p[1], p[2], p[3], p[4], p[5], p[6]};
}

Camera::Camera(const Mat34& projection) : projection_(projection) {
  const Mat3 m = projection_.leftCols<3>();
  Eigen::FullPivLU<Mat3> lu(m);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kInvalidArgument, "camera intrinsics block is singular");
  }
  intrinsics_inverse_ = lu.inverse();
  optical_center_ = -intrinsics_inverse_ * projection_.col(3);
}

Camera Camera::identity() {
  Mat34 p = Mat34::Zero();
  p.leftCols<3>().setIdentity();
  return Camera(p);
}

Camera Camera::from_intrinsics(double focal, double cx, double cy) {
  Mat34 p = Mat34::Zero();
  p(0, 0) = focal;
  p(1, 1) = focal;
  p(0, 2) = cx;
  p(1, 2) = cy;
  p(2, 2) = 1.0;
  return Camera(p);
}

double point_depth(const Camera& camera, const Vec3& point) {
  return camera.projection().row(2).head<3>().dot(point) + camera.projection()(2, 3);
}

Vec2 project_point(const Camera& camera, const Vec3& point) {
  const Vec3 q = camera.projection().leftCols<3>() * point + camera.projection().col(3);
  if (!(q[2] > kMinDepth)) {
    throw Error(ErrorCode::kDepthTooSmall, "point depth " + std::to_string(q[2]));
  }
  return q.head<2>() / q[2];
}

Mat3 rotation_y(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return r;
}

Vec3 unit_corner(int j) {
  return {(j & 4) ? 1.0 : -1.0, (j & 2) ? 1.0 : -1.0, (j & 1) ? 1.0 : -1.0};
}

std::array<Vec3, 8> box_corners(const Box3D& box) {
  const Mat3 r = rotation_y(box.theta);
  const Vec3 half(0.5 * box.w, 0.5 * box.h, 0.5 * box.l);
  const Vec3 c = box.center();
  std::array<Vec3, 8> out;
  for (int j = 0; j < 8; ++j) out[j] = c + r * half.cwiseProduct(unit_corner(j));
  return out;
}

double iou_2d(const Box2D& a, const Box2D& b) {
  const double area_a = a.area(), area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

namespace {

// Scalar-generic overlap routines; instantiated for double and for
// Eigen::AutoDiffScalar in the analytic gradient.
template <typename T>
struct Pt {
  T x, z;
};

template <typename T>
struct UprightBox {
  T h, w, l, x, y, z, theta;
};

template <typename T>
UprightBox<T> upright(const Box3D& b) {
  return {T(b.h), T(b.w), T(b.l), T(b.x), T(b.y), T(b.z), T(b.theta)};
}

template <typename T>
std::vector<Pt<T>> footprint(const UprightBox<T>& b) {
  using std::cos;
  using std::sin;
  const T c = cos(b.theta), s = sin(b.theta);
  const T hw = 0.5 * b.w, hl = 0.5 * b.l;
  const double sx[4] = {-1.0, 1.0, 1.0, -1.0};
  const double sz[4] = {-1.0, -1.0, 1.0, 1.0};
  std::vector<Pt<T>> out;
  out.reserve(4);
  for (int k = 0; k < 4; ++k) {
    const T lx = sx[k] * hw, lz = sz[k] * hl;
    out.push_back({b.x + c * lx + s * lz, b.z - s * lx + c * lz});
  }
  return out;
}

template <typename T>
T cross(const Pt<T>& o, const Pt<T>& a, const Pt<T>& p) {
  return (a.x - o.x) * (p.z - o.z) - (a.z - o.z) * (p.x - o.x);
}

template <typename T>
T signed_area(const std::vector<Pt<T>>& poly) {
  T acc(0.0);
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pt<T>& p = poly[i];
    const Pt<T>& q = poly[(i + 1) % n];
    acc += p.x * q.z - q.x * p.z;
  }
  return 0.5 * acc;
}

// Sutherland-Hodgman.
template <typename T>
std::vector<Pt<T>> clip(std::vector<Pt<T>> subject, const std::vector<Pt<T>>& clip_poly) {
  const double orient = signed_area(clip_poly) >= T(0.0) ? 1.0 : -1.0;
  const std::size_t m = clip_poly.size();
  for (std::size_t e = 0; e < m && !subject.empty(); ++e) {
    const Pt<T>& a = clip_poly[e];
    const Pt<T>& b = clip_poly[(e + 1) % m];
    std::vector<Pt<T>> out;
    out.reserve(subject.size() + 2);
    const std::size_t n = subject.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Pt<T>& p = subject[i];
      const Pt<T>& q = subject[(i + 1) % n];
      const T dp = orient * cross(a, b, p);
      const T dq = orient * cross(a, b, q);
      const bool p_in = dp >= T(0.0);
      const bool q_in = dq >= T(0.0);
      if (p_in) out.push_back(p);
      if (p_in != q_in) {
        const T t = dp / (dp - dq);
        out.push_back({p.x + t * (q.x - p.x), p.z + t * (q.z - p.z)});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

template <typename T>
T overlap_1d(T a_lo, T a_hi, T b_lo, T b_hi) {
  const T lo = a_lo > b_lo ? a_lo : b_lo;
  const T hi = a_hi < b_hi ? a_hi : b_hi;
  return hi > lo ? T(hi - lo) : T(0.0);
}

template <typename T>
T bev_overlap(const UprightBox<T>& a, const UprightBox<T>& b) {
  const std::vector<Pt<T>> poly = clip(footprint(a), footprint(b));
  if (poly.size() < 3) return T(0.0);
  const T area = signed_area(poly);
  return area < T(0.0) ? T(-area) : area;
}

template <typename T>
T intersection_volume_t(const UprightBox<T>& a, const UprightBox<T>& b) {
  const T vertical = overlap_1d<T>(a.y - 0.5 * a.h, a.y + 0.5 * a.h, b.y - 0.5 * b.h,
                                   b.y + 0.5 * b.h);
  if (!(vertical > T(0.0))) return T(0.0);
  return bev_overlap(a, b) * vertical;
}

template <typename T>
T iou_3d_t(const UprightBox<T>& a, const UprightBox<T>& b) {
  const T va = a.h * a.w * a.l;
  const T vb = b.h * b.w * b.l;
  if (!(va > T(0.0)) || !(vb > T(0.0))) return T(0.0);
  const T inter = intersection_volume_t(a, b);
  const T uni = va + vb - inter;
  if (!(uni > T(0.0))) return T(0.0);
  return inter / uni;
}

}  // namespace

std::array<Vec2, 4> bev_footprint(const Box3D& box) {
  const auto pts = footprint(upright<double>(box));
  std::array<Vec2, 4> out;
  for (int k = 0; k < 4; ++k) out[k] = Vec2(pts[k].x, pts[k].z);
  return out;
}

std::vector<Vec2> clip_convex_polygon(const std::vector<Vec2>& subject,
                                      const std::vector<Vec2>& clip_poly) {
  std::vector<Pt<double>> s, c;
  for (const Vec2& p : subject) s.push_back({p.x(), p.y()});
  for (const Vec2& p : clip_poly) c.push_back({p.x(), p.y()});
  std::vector<Vec2> out;
  for (const auto& p : clip(std::move(s), c)) out.emplace_back(p.x, p.z);
  return out;
}

double polygon_area(const std::vector<Vec2>& polygon) {
  std::vector<Pt<double>> p;
  for (const Vec2& v : polygon) p.push_back({v.x(), v.y()});
  return p.size() < 3 ? 0.0 : signed_area(p);
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  return bev_overlap(upright<double>(a), upright<double>(b));
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const double area_a = a.w * a.l, area_b = b.w * b.l;
  if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
  const double inter = bev_intersection_area(a, b);
  return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

double intersection_volume(const Box3D& a, const Box3D& b) {
  return intersection_volume_t(upright<double>(a), upright<double>(b));
}

double iou_3d(const Box3D& a, const Box3D& b) {
  return std::clamp(iou_3d_t(upright<double>(a), upright<double>(b)), 0.0, 1.0);
}

BoxVector iou_3d_gradient_autodiff(const Box3D& a, const Box3D& b) {
  using Ad = Eigen::AutoDiffScalar<BoxVector>;
  const BoxVector p = a.params();
  UprightBox<Ad> ua;
  Ad* fields[kBoxParams] = {&ua.h, &ua.w, &ua.l, &ua.x, &ua.y, &ua.z, &ua.theta};
  for (int k = 0; k < kBoxParams; ++k) *fields[k] = Ad(p[k], kBoxParams, k);
  UprightBox<Ad> ub;
  const BoxVector q = b.params();
  Ad* gfields[kBoxParams] = {&ub.h, &ub.w, &ub.l, &ub.x, &ub.y, &ub.z, &ub.theta};
  for (int k = 0; k < kBoxParams; ++k) *gfields[k] = Ad(q[k], BoxVector::Zero());
  const Ad v = iou_3d_t(ua, ub);
  if (v.derivatives().size() != kBoxParams) return BoxVector::Zero();
  return v.derivatives();
}

Box2D projected_envelope(const Camera& camera, const Box3D& box) {
  const auto corners = box_corners(box);
  double xs[8], ys[8], zs[8], us[8], vs[8], ds[8];
  for (int j = 0; j < 8; ++j) {
    xs[j] = corners[j].x();
    ys[j] = corners[j].y();
    zs[j] = corners[j].z();
  }
  simd::Projection34 p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) p.m[4 * r + c] = camera.projection()(r, c);
  simd::active_kernels().project_points(p, xs, ys, zs, 8, us, vs, ds);
  Box2D out{us[0], vs[0], us[0], vs[0]};
  for (int j = 0; j < 8; ++j) {
    if (!(ds[j] > kMinDepth)) {
      throw Error(ErrorCode::kDepthTooSmall, "box corner behind camera");
    }
    out.x1 = std::min(out.x1, us[j]);
    out.x2 = std::max(out.x2, us[j]);
    out.y1 = std::min(out.y1, vs[j]);
    out.y2 = std::max(out.y2, vs[j]);
  }
  return out;
}

namespace {
simd::BoxFrame frame_of(const Box3D& b) {
  return {b.x, b.y, b.z, std::cos(b.theta), std::sin(b.theta), 0.5 * b.w, 0.5 * b.h, 0.5 * b.l};
}
}  // namespace

MonteCarloIou monte_carlo_iou(const Box3D& a, const Box3D& b, std::uint64_t samples,
                              std::uint64_t seed) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Box3D* box : {&a, &b}) {
    for (const Vec3& c : box_corners(*box)) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  const Vec3 extent = hi - lo;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  constexpr std::size_t kChunk = 4096;
  std::vector<double> xs(kChunk), ys(kChunk), zs(kChunk);
  const simd::BoxFrame fa = frame_of(a), fb = frame_of(b);
  const simd::KernelTable& k = simd::active_kernels();
  simd::InsideCounts total;
  std::uint64_t done = 0;
  while (done < samples) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, samples - done));
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = lo.x() + extent.x() * uniform();
      ys[i] = lo.y() + extent.y() * uniform();
      zs[i] = lo.z() + extent.z() * uniform();
    }
    const simd::InsideCounts c = k.count_inside(fa, fb, xs.data(), ys.data(), zs.data(), n);
    total.in_a += c.in_a;
    total.in_b += c.in_b;
    total.in_both += c.in_both;
    done += n;
  }
  MonteCarloIou out;
  out.samples = samples;
  const double region = extent.x() * extent.y() * extent.z();
  out.intersection_volume = samples ? region * static_cast<double>(total.in_both) / samples : 0.0;
  const std::uint64_t uni = total.in_a + total.in_b - total.in_both;
  out.iou = uni ? static_cast<double>(total.in_both) / static_cast<double>(uni) : 0.0;
  return out;
}

}  // namespace monobox
