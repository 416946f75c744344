#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "monobox/errors.hpp"
#include "monobox/metrics.hpp"
#include "oracle.hpp"

using namespace monobox;

namespace {

EvalObject object(double score, Box2D box2d, Box3D box, double alpha = 0.0) {
  EvalObject o;
  o.label = "Car";
  o.score = score;
  o.box2d = box2d;
  o.box = box;
  o.alpha = alpha;
  return o;
}

const Box2D kBox2d{100, 100, 200, 180};
const Box3D kBox{1.5, 1.6, 3.9, 0, 1, 20, 0};

const EvalCriterion k3d{CriterionKind::kIou3D, 0.7, 1.0};
const EvalCriterion k2d{CriterionKind::kIou2D, 0.7, 1.0};

ImageEval perfect_image(std::mt19937_64& rng, int n) {
  ImageEval img;
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < n; ++i) {
    Box3D b = kBox;
    b.x = -15 + 10 * i;
    const Box2D b2{100.0 + 150 * i, 100, 200.0 + 150 * i, 180};
    img.ground_truth.push_back(object(1.0, b2, b, 0.3 * i));
    img.detections.push_back(object(0.5 + 0.5 * u(rng), b2, b, 0.3 * i));
  }
  return img;
}

/// Brute-force joint-criterion AP: greedy per image, then pooled ranks.
double brute_force_alp(const std::vector<ImageEval>& images, double max_dist, double iou_thresh) {
  struct Ranked {
    double score;
    bool tp;
  };
  std::vector<Ranked> all;
  std::size_t positives = 0;
  for (const ImageEval& img : images) {
    positives += img.ground_truth.size();
    std::vector<std::size_t> order(img.detections.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return img.detections[a].score > img.detections[b].score;
    });
    std::vector<bool> used(img.ground_truth.size(), false);
    for (std::size_t d : order) {
      const EvalObject& det = img.detections[d];
      int best = -1;
      double best_iou = -1;
      for (std::size_t g = 0; g < img.ground_truth.size(); ++g) {
        if (used[g]) continue;
        const Box2D& a = det.box2d;
        const Box2D& b = img.ground_truth[g].box2d;
        const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
        const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
        const double inter = iw * ih;
        const double v = inter / ((a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter);
        if (v > best_iou) {
          best_iou = v;
          best = static_cast<int>(g);
        }
      }
      bool tp = false;
      if (best >= 0 && best_iou >= iou_thresh) {
        const Box3D& gb = img.ground_truth[best].box;
        const double dist = std::sqrt(std::pow(det.box.x - gb.x, 2) + std::pow(det.box.y - gb.y, 2) +
                                      std::pow(det.box.z - gb.z, 2));
        tp = dist <= max_dist;
      }
      if (tp) used[best] = true;
      all.push_back({det.score, tp});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
  std::vector<bool> flags;
  for (const Ranked& r : all) flags.push_back(r.tp);
  return oracle::ap11(flags, positives);
}

}  // namespace

TEST(Match, OneToOne) {
  const std::vector<EvalObject> gt{object(1, kBox2d, kBox)};
  Assignment a = match_detections(std::vector<EvalObject>{object(0.9, kBox2d, kBox)}, gt, k3d);
  EXPECT_EQ(a.true_positives, 1);
  EXPECT_EQ(a.false_positives, 0);
  EXPECT_EQ(a.false_negatives, 0);
  a = match_detections(std::vector<EvalObject>{object(0.9, kBox2d, kBox), object(0.8, kBox2d, kBox)}, gt, k3d);
  EXPECT_EQ(a.true_positives, 1);
  EXPECT_EQ(a.false_positives, 1);
  EXPECT_EQ(a.det_to_gt[0], 0);
  EXPECT_EQ(a.det_to_gt[1], kFalsePositive);
}

TEST(Match, AlpNeedsLocalization) {
  // 2D IoU 0.8 but the center is 1.5 m off.
  const std::vector<EvalObject> gt{object(1, kBox2d, kBox)};
  Box3D moved = kBox;
  moved.z += 1.5;
  const EvalObject det = object(0.9, Box2D{100, 100, 200, 164}, moved);
  ASSERT_NEAR(iou_2d(det.box2d, kBox2d), 0.8, 1e-12);
  const EvalCriterion alp{CriterionKind::kAlp, 0.7, 1.0};
  const Assignment a = match_detections(std::vector<EvalObject>{det}, gt, alp);
  EXPECT_EQ(a.false_positives, 1);
  EXPECT_EQ(a.true_positives, 0);
}

TEST(Match, IgnoredGroundTruthNeitherTpNorFp) {
  std::vector<EvalObject> gt{object(1, kBox2d, kBox)};
  gt[0].ignore = true;
  const Assignment a = match_detections(std::vector<EvalObject>{object(0.9, kBox2d, kBox)}, gt, k3d);
  EXPECT_EQ(a.det_to_gt[0], kIgnoredDetection);
  EXPECT_EQ(a.true_positives + a.false_positives + a.false_negatives, 0);
  std::vector<ImageEval> imgs{{{object(0.9, kBox2d, kBox)}, gt}};
  EXPECT_EQ(evaluate(imgs, k3d).recall.size(), 0u);
}

TEST(Criterion, Validation) {
  EXPECT_THROW((EvalCriterion{CriterionKind::kIou3D, 0.0, 1.0}.validate()), Error);
  EXPECT_THROW((EvalCriterion{CriterionKind::kIou3D, 1.2, 1.0}.validate()), Error);
  EXPECT_THROW((EvalCriterion{CriterionKind::kAlp, 0.7, 0.0}.validate()), Error);
  EXPECT_NO_THROW((EvalCriterion{CriterionKind::kIouBev, 1.0, 0.0}.validate()));
}

TEST(AveragePrecision, PerfectIsOne) {
  std::mt19937_64 rng(101);
  std::vector<ImageEval> imgs;
  for (int i = 0; i < 5; ++i) imgs.push_back(perfect_image(rng, 4));
  for (CriterionKind k : {CriterionKind::kIou2D, CriterionKind::kIouBev, CriterionKind::kIou3D, CriterionKind::kAlp}) {
    EXPECT_DOUBLE_EQ(average_precision(imgs, EvalCriterion{k, 0.7, 1.0}), 1.0);
  }
  EXPECT_DOUBLE_EQ(average_precision(imgs, k3d, Interpolation::k40Point), 1.0);
}

TEST(AveragePrecision, NoDetectionsIsZero) {
  std::vector<ImageEval> imgs{{{}, {object(1, kBox2d, kBox)}}};
  EXPECT_EQ(average_precision(imgs, k3d), 0.0);
}

TEST(AveragePrecision, HandComputedHalf) {
  Box3D far = kBox;
  far.x += 10;
  std::vector<ImageEval> imgs{{{object(0.9, Box2D{500, 100, 600, 180}, far), object(0.8, kBox2d, kBox)},
                               {object(1, kBox2d, kBox)}}};
  // Ranks: FP then TP -> precision 0.5 at recall 1 for every grid point.
  EXPECT_DOUBLE_EQ(average_precision(imgs, k3d), 0.5);
  const PRCurve c = evaluate(imgs, k3d);
  EXPECT_EQ(c.recall, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(c.precision, (std::vector<double>{0.0, 0.5}));
}

TEST(AveragePrecision, HandComputedPartialRecall) {
  // 4 GT, ranks TP FP TP: recalls .25 .25 .5, precisions 1 .5 2/3.
  // Grid 0..0.2 -> 1 (3 pts), 0.3..0.5 -> 2/3 (3 pts), rest 0: (3 + 2) / 11.
  const std::vector<RankedDetection> ranked{{0.9, true, 1}, {0.8, false, 0}, {0.7, true, 1}};
  EXPECT_NEAR(pr_curve(ranked, 4).ap, 5.0 / 11.0, 1e-15);
  EXPECT_NEAR(pr_curve(ranked, 4).ap, oracle::ap11({true, false, true}, 4), 1e-15);
}

TEST(AveragePrecision, FortyPointGridSkipsZero) {
  const std::vector<RankedDetection> ranked{{0.9, false, 0}, {0.8, true, 1}};
  EXPECT_DOUBLE_EQ(pr_curve(ranked, 1, Interpolation::k40Point).ap, 0.5);
  const std::vector<RankedDetection> half{{0.9, true, 1}};
  EXPECT_DOUBLE_EQ(pr_curve(half, 2, Interpolation::k40Point).ap, 0.5);
  EXPECT_NEAR(pr_curve(half, 2).ap, 6.0 / 11.0, 1e-15);
}

TEST(AveragePrecision, RandomRanksMatchOracleAndAreMonotone) {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + static_cast<int>(u(rng) * 30);
    std::vector<RankedDetection> ranked;
    std::size_t tps = 0;
    for (int i = 0; i < n; ++i) {
      const bool tp = u(rng) < 0.5;
      tps += tp;
      ranked.push_back({1.0 - i * 1e-3, tp, tp ? 1.0 : 0.0});
    }
    const std::size_t positives = tps + static_cast<std::size_t>(u(rng) * 5);
    if (positives == 0) continue;
    std::vector<bool> flags;
    for (const auto& r : ranked) flags.push_back(r.true_positive);
    const double ap = pr_curve(ranked, positives).ap;
    EXPECT_NEAR(ap, oracle::ap11(flags, positives), 1e-12);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    for (auto& r : ranked) {
      if (!r.true_positive && tps < positives) {
        r.true_positive = true;
        ++tps;
        EXPECT_GE(pr_curve(ranked, positives).ap, ap - 1e-15);
        break;
      }
    }
  }
}

TEST(Aos, OrientationCases) {
  auto imgs_with = [](double da) {
    return std::vector<ImageEval>{{{object(0.9, kBox2d, kBox, da)}, {object(1, kBox2d, kBox, 0.0)}}};
  };
  EXPECT_DOUBLE_EQ(average_orientation_similarity(imgs_with(0.0)),
                   average_precision(imgs_with(0.0), k2d));
  EXPECT_NEAR(average_orientation_similarity(imgs_with(M_PI)), 0.0, 1e-15);
  EXPECT_NEAR(average_orientation_similarity(imgs_with(M_PI / 2)), 0.5, 1e-15);
}

TEST(Aos, NeverExceedsAp) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<ImageEval> imgs{perfect_image(rng, 5)};
    for (EvalObject& d : imgs[0].detections) {
      d.alpha += 2.0 * u(rng);
      d.box2d.x1 += 20 * u(rng);
    }
    EXPECT_LE(average_orientation_similarity(imgs), average_precision(imgs, k2d) + 1e-15);
  }
}

TEST(Alp, Cases) {
  std::mt19937_64 rng(104);
  std::vector<ImageEval> imgs{perfect_image(rng, 4)};
  for (EvalObject& d : imgs[0].detections) d.box.z += 0.5;
  EXPECT_DOUBLE_EQ(average_localization_precision(imgs), average_precision(imgs, k2d));
  for (EvalObject& d : imgs[0].detections) d.box.z += 1.5;
  EXPECT_EQ(average_localization_precision(imgs), 0.0);
}

TEST(Alp, MixedSetMatchesBruteForce) {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(-1, 1), s(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<ImageEval> imgs;
    for (int k = 0; k < 3; ++k) {
      ImageEval img = perfect_image(rng, 4);
      for (EvalObject& d : img.detections) {
        d.box2d.x1 += 25 * u(rng);
        d.box2d.y2 += 20 * u(rng);
        d.box.z += 1.2 * u(rng);
        d.box.x += 0.8 * u(rng);
        d.score = s(rng);
      }
      img.detections.push_back(object(s(rng), img.ground_truth[0].box2d, img.ground_truth[0].box));
      imgs.push_back(img);
    }
    EXPECT_NEAR(average_localization_precision(imgs, 1.0, 0.7), brute_force_alp(imgs, 1.0, 0.7), 1e-12);
  }
}

TEST(Difficulty, LevelsAndFiltering) {
  EXPECT_EQ(difficulty_level(Difficulty::kEasy).min_height, 40.0);
  EXPECT_EQ(difficulty_level(Difficulty::kModerate).max_occlusion, 1);
  EXPECT_EQ(difficulty_level(Difficulty::kHard).max_truncation, 0.5);
  ImageEval img;
  img.ground_truth.push_back(object(1, kBox2d, kBox));
  img.ground_truth.push_back(object(1, Box2D{0, 0, 50, 30}, kBox));  // 30 px tall
  img.ground_truth[0].occlusion = 2;
  img.detections.push_back(object(0.9, Box2D{0, 0, 50, 20}, kBox));
  const auto easy = apply_difficulty(std::vector<ImageEval>{img}, difficulty_level(Difficulty::kEasy));
  EXPECT_TRUE(easy[0].ground_truth[0].ignore);
  EXPECT_TRUE(easy[0].ground_truth[1].ignore);
  EXPECT_TRUE(easy[0].detections.empty());
  const auto hard = apply_difficulty(std::vector<ImageEval>{img}, difficulty_level(Difficulty::kHard));
  EXPECT_FALSE(hard[0].ground_truth[0].ignore);
  EXPECT_FALSE(hard[0].ground_truth[1].ignore);
}

TEST(FilterLabel, SplitsClasses) {
  ImageEval img;
  img.detections.push_back(object(0.9, kBox2d, kBox));
  img.ground_truth.push_back(object(1, kBox2d, kBox));
  img.ground_truth.back().label = "Pedestrian";
  const auto cars = filter_label(std::vector<ImageEval>{img}, "Car");
  EXPECT_EQ(cars[0].detections.size(), 1u);
  EXPECT_TRUE(cars[0].ground_truth.empty());
}
