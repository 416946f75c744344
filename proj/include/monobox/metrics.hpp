#pragma once
// Detection evaluation: AP under 2D / BEV / 3D IoU, orientation similarity
// (AOS) and localization precision (ALP).

#include <span>
#include <string>
#include <vector>

#include "monobox/geometry.hpp"

namespace monobox {

enum class CriterionKind { kIou2D, kIouBev, kIou3D, kAlp };

struct EvalCriterion {
  CriterionKind kind = CriterionKind::kIou3D;
  double iou_threshold = 0.7;
  double localization_threshold = 1.0;  // meters, ALP only

  /// Throws Error(kInvalidArgument) on out-of-range thresholds.
  void validate() const;
};

/// A detection or a ground-truth object as seen by the evaluator.
struct EvalObject {
  std::string label;
  double score = 1.0;
  Box2D box2d;
  Box3D box;
  double alpha = 0.0;  // observation angle
  // Ground truth only.
  bool ignore = false;  // "don't care": matches count neither TP nor FP
  double truncation = 0.0;
  int occlusion = 0;
};

struct ImageEval {
  std::vector<EvalObject> detections;
  std::vector<EvalObject> ground_truth;
};

inline constexpr int kFalsePositive = -1;
inline constexpr int kIgnoredDetection = -2;

struct Assignment {
  std::vector<int> det_to_gt;  // GT index, kFalsePositive or kIgnoredDetection
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;  // unmatched non-ignored GT
};

/// Similarity used to pick the best ground truth under a criterion (IoU of
/// the criterion's kind; 2D IoU for ALP).
double criterion_similarity(const EvalObject& det, const EvalObject& gt, const EvalCriterion& c);
bool criterion_satisfied(const EvalObject& det, const EvalObject& gt, const EvalCriterion& c);

/// Greedy score-descending matching (stable for equal scores) within one image.
Assignment match_detections(std::span<const EvalObject> detections,
                            std::span<const EvalObject> ground_truth,
                            const EvalCriterion& criterion);

enum class Interpolation { k11Point, k40Point };

struct RankedDetection {
  double score = 0.0;
  bool true_positive = false;
  double orientation_similarity = 0.0;  // (1 + cos d_alpha) / 2 for TPs
};

struct PRCurve {
  std::vector<double> recall;
  std::vector<double> precision;
  std::vector<double> orientation;  // cumulative similarity / detections
  double ap = 0.0;
  double aos = 0.0;
};

/// Builds the PR curve from pooled detections (sorted internally by
/// descending score, stable) and interpolates. Interpolated precision at
/// recall r is the max precision at recall >= r.
PRCurve pr_curve(std::vector<RankedDetection> ranked, std::size_t num_positives,
                 Interpolation interpolation = Interpolation::k11Point);

PRCurve evaluate(std::span<const ImageEval> images, const EvalCriterion& criterion,
                 Interpolation interpolation = Interpolation::k11Point);

double average_precision(std::span<const ImageEval> images, const EvalCriterion& criterion,
                         Interpolation interpolation = Interpolation::k11Point);

/// AP-style aggregation with each TP weighted by (1 + cos(d_alpha)) / 2,
/// matched under 2D IoU >= iou_threshold.
double average_orientation_similarity(std::span<const ImageEval> images,
                                      double iou_threshold = 0.7,
                                      Interpolation interpolation = Interpolation::k11Point);

/// AP with the joint criterion 2D IoU >= iou_threshold and 3D center error <= max_dist.
double average_localization_precision(std::span<const ImageEval> images, double max_dist = 1.0,
                                      double iou_threshold = 0.7,
                                      Interpolation interpolation = Interpolation::k11Point);

enum class Difficulty { kEasy, kModerate, kHard };

struct DifficultyLevel {
  double min_height;  // pixels
  int max_occlusion;
  double max_truncation;
};

/// Public benchmark definitions: easy (40 px, fully visible, 15%), moderate
/// (25 px, partly occluded, 30%), hard (25 px, largely occluded, 50%).
DifficultyLevel difficulty_level(Difficulty d);

/// Ground truth outside the level becomes "don't care"; detections shorter
/// than min_height are dropped.
std::vector<ImageEval> apply_difficulty(std::span<const ImageEval> images,
                                        const DifficultyLevel& level);

/// Restricts both lists to a single label.
std::vector<ImageEval> filter_label(std::span<const ImageEval> images, const std::string& label);

}  // namespace monobox
