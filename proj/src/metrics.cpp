#include "monobox/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "monobox/errors.hpp"

namespace monobox {

void EvalCriterion::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must be in (0, 1]");
  }
  if (kind == CriterionKind::kAlp && !(localization_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "localization threshold must be positive");
  }
}

double criterion_similarity(const EvalObject& det, const EvalObject& gt, const EvalCriterion& c) {
  switch (c.kind) {
    case CriterionKind::kIou2D:
    case CriterionKind::kAlp:
      return iou_2d(det.box2d, gt.box2d);
    case CriterionKind::kIouBev:
      return iou_bev(det.box, gt.box);
    case CriterionKind::kIou3D:
      return iou_3d(det.box, gt.box);
  }
  return 0.0;
}

bool criterion_satisfied(const EvalObject& det, const EvalObject& gt, const EvalCriterion& c) {
  if (!(criterion_similarity(det, gt, c) >= c.iou_threshold)) return false;
  if (c.kind == CriterionKind::kAlp) {
    return (det.box.center() - gt.box.center()).norm() <= c.localization_threshold;
  }
  return true;
}

namespace {

std::vector<std::size_t> score_order(std::span<const EvalObject> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

}  // namespace

Assignment match_detections(std::span<const EvalObject> detections,
                            std::span<const EvalObject> ground_truth,
                            const EvalCriterion& criterion) {
  criterion.validate();
  Assignment out;
  out.det_to_gt.assign(detections.size(), kFalsePositive);
  std::vector<bool> matched(ground_truth.size(), false);

  for (std::size_t di : score_order(detections)) {
    const EvalObject& det = detections[di];
    int best = -1;
    double best_sim = -1.0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (matched[g] || ground_truth[g].ignore) continue;
      const double sim = criterion_similarity(det, ground_truth[g], criterion);
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && criterion_satisfied(det, ground_truth[best], criterion)) {
      matched[best] = true;
      out.det_to_gt[di] = best;
      ++out.true_positives;
      continue;
    }
    const bool hits_ignored = std::any_of(
        ground_truth.begin(), ground_truth.end(), [&](const EvalObject& g) {
          return g.ignore && criterion_satisfied(det, g, criterion);
        });
    if (hits_ignored) {
      out.det_to_gt[di] = kIgnoredDetection;
    } else {
      ++out.false_positives;
    }
  }
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    if (!ground_truth[g].ignore && !matched[g]) ++out.false_negatives;
  }
  return out;
}

PRCurve pr_curve(std::vector<RankedDetection> ranked, std::size_t num_positives,
                 Interpolation interpolation) {
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedDetection& a, const RankedDetection& b) {
                     return a.score > b.score;
                   });
  PRCurve curve;
  if (num_positives == 0) return curve;
  double tp = 0.0, sim = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].true_positive) {
      tp += 1.0;
      sim += ranked[k].orientation_similarity;
    }
    const double n = static_cast<double>(k + 1);
    curve.recall.push_back(tp / static_cast<double>(num_positives));
    curve.precision.push_back(tp / n);
    curve.orientation.push_back(sim / n);
  }

  std::vector<double> grid;
  if (interpolation == Interpolation::k11Point) {
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  } else {
    for (int i = 1; i <= 40; ++i) grid.push_back(i / 40.0);
  }
  double ap = 0.0, aos = 0.0;
  for (double r : grid) {
    double best_p = 0.0, best_o = 0.0;
    for (std::size_t k = 0; k < curve.recall.size(); ++k) {
      if (curve.recall[k] >= r - 1e-12) {
        best_p = std::max(best_p, curve.precision[k]);
        best_o = std::max(best_o, curve.orientation[k]);
      }
    }
    ap += best_p;
    aos += best_o;
  }
  curve.ap = ap / static_cast<double>(grid.size());
  curve.aos = aos / static_cast<double>(grid.size());
  return curve;
}

PRCurve evaluate(std::span<const ImageEval> images, const EvalCriterion& criterion,
                 Interpolation interpolation) {
  std::vector<RankedDetection> ranked;
  std::size_t positives = 0;
  for (const ImageEval& img : images) {
    const Assignment a = match_detections(img.detections, img.ground_truth, criterion);
    for (const EvalObject& g : img.ground_truth) positives += g.ignore ? 0 : 1;
    for (std::size_t d = 0; d < img.detections.size(); ++d) {
      const int m = a.det_to_gt[d];
      if (m == kIgnoredDetection) continue;
      RankedDetection r;
      r.score = img.detections[d].score;
      r.true_positive = m >= 0;
      if (r.true_positive) {
        const double da = img.detections[d].alpha - img.ground_truth[m].alpha;
        r.orientation_similarity = 0.5 * (1.0 + std::cos(da));
      }
      ranked.push_back(r);
    }
  }
  return pr_curve(std::move(ranked), positives, interpolation);
}

double average_precision(std::span<const ImageEval> images, const EvalCriterion& criterion,
                         Interpolation interpolation) {
  return evaluate(images, criterion, interpolation).ap;
}

double average_orientation_similarity(std::span<const ImageEval> images, double iou_threshold,
                                      Interpolation interpolation) {
  EvalCriterion c{CriterionKind::kIou2D, iou_threshold, 1.0};
  return evaluate(images, c, interpolation).aos;
}

double average_localization_precision(std::span<const ImageEval> images, double max_dist,
                                      double iou_threshold, Interpolation interpolation) {
  EvalCriterion c{CriterionKind::kAlp, iou_threshold, max_dist};
  return evaluate(images, c, interpolation).ap;
}

DifficultyLevel difficulty_level(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return {40.0, 0, 0.15};
    case Difficulty::kModerate: return {25.0, 1, 0.30};
    case Difficulty::kHard: return {25.0, 2, 0.50};
  }
  return {25.0, 2, 0.50};
}

std::vector<ImageEval> apply_difficulty(std::span<const ImageEval> images,
                                        const DifficultyLevel& level) {
  std::vector<ImageEval> out(images.begin(), images.end());
  for (ImageEval& img : out) {
    for (EvalObject& g : img.ground_truth) {
      if (g.box2d.height() < level.min_height || g.occlusion > level.max_occlusion ||
          g.truncation > level.max_truncation) {
        g.ignore = true;
      }
    }
    std::erase_if(img.detections,
                  [&](const EvalObject& d) { return d.box2d.height() < level.min_height; });
  }
  return out;
}

std::vector<ImageEval> filter_label(std::span<const ImageEval> images, const std::string& label) {
  std::vector<ImageEval> out;
  out.reserve(images.size());
  for (const ImageEval& img : images) {
    ImageEval f;
    for (const EvalObject& d : img.detections)
      if (d.label == label) f.detections.push_back(d);
    for (const EvalObject& g : img.ground_truth)
      if (g.label == label) f.ground_truth.push_back(g);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace monobox
