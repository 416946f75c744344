#pragma once
// KITTI object label and calibration text formats.
//
// Label line: type truncated occluded alpha x1 y1 x2 y2 h w l x y z rotation_y [score]
// The location (x, y, z) is the bottom center of the box (y axis down); Box3D
// uses the geometric center, so y_center = y_kitti - h / 2.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "monobox/detection.hpp"
#include "monobox/geometry.hpp"

namespace monobox {

struct KittiLabel {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  Box2D bbox;
  double h = 0.0, w = 0.0, l = 0.0;
  double x = 0.0, y = 0.0, z = 0.0;  // bottom center
  double rotation_y = 0.0;
  std::optional<double> score;

  Box3D box() const;
  static KittiLabel from_box(std::string type, const Box3D& box, const Box2D& bbox,
                             std::optional<double> score = std::nullopt);
};

/// Throws Error(kMalformedLine) naming the 1-based line number. Blank lines
/// are skipped. Unknown types are kept verbatim.
std::vector<KittiLabel> parse_kitti_labels(std::string_view text);

/// Fixed two-decimal fields; the score column is written when present.
std::string emit_kitti_labels(std::span<const KittiLabel> labels);

/// Reads the "P2:" line (12 reals, row-major). Throws kMissingP2 or kMalformedLine.
Camera parse_kitti_calib(std::string_view text);

/// A "P2:" line with shortest round-trip formatting.
std::string emit_kitti_calib(const Camera& camera);

KittiLabel label_from_detection(const Detection& detection);

/// 16-field lines; alpha recomputed from the fitted box, truncated/occluded
/// written as -1 (unknown), 2D box from the candidate.
std::string emit_kitti_predictions(std::span<const Detection> detections);

}  // namespace monobox
