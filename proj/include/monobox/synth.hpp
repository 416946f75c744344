#pragma once
// Synthetic scenes: upright boxes placed in front of a KITTI-like camera,
// with noiseless and noisy target vectors sampled at support-region anchors.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "monobox/detection.hpp"
#include "monobox/targets.hpp"

namespace monobox {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool valid() const { return lo <= hi; }
};

/// Mean dimensions of a class; sampled dims are mean * exp(N(0, log_std^2)).
struct ClassPrior {
  std::string label;
  double weight = 1.0;
  double h = 1.0, w = 1.0, l = 1.0;
  double log_std = 0.08;
};

/// Standard deviation of the additive Gaussian noise, per target group.
struct NoiseConfig {
  double delta_c = 0.0;      // pixels
  double distance = 0.0;     // meters
  double orientation = 0.0;  // sin / cos components
  double log_dims = 0.0;
  double corners = 0.0;  // pixels

  TargetArray sigma() const;
  bool is_zero() const { return sigma().isZero(0.0); }
};

/// The KITTI object-benchmark left color camera (P2 of a typical drive).
Camera kitti_reference_camera();

struct SynthConfig {
  int min_objects = 1;
  int max_objects = 4;
  Range x{-10.0, 10.0};
  Range y{0.4, 1.2};  // box center, y down
  Range z{8.0, 45.0};
  Range yaw{-3.14159265358979323846, 3.14159265358979323846};
  std::vector<ClassPrior> classes = {
      {"Car", 0.7, 1.53, 1.63, 3.88, 0.08},
      {"Pedestrian", 0.15, 1.76, 0.66, 0.84, 0.08},
      {"Cyclist", 0.15, 1.74, 0.60, 1.76, 0.08},
  };
  NoiseConfig noise;
  std::uint64_t seed = 0;

  Camera camera = kitti_reference_camera();
  int image_width = 1242;
  int image_height = 375;
  double stride = kOutputStride;
  /// Round box parameters to 0.01 so KITTI text round trips are exact.
  bool quantize = true;
  /// Objects whose 2D boxes overlap more than this are resampled.
  double max_box2d_iou = 0.25;
  int max_tries = 1000;

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

struct SynthObject {
  std::string label;
  Box3D box;
  Box2D box2d;  // projected envelope
  SupportRegion region;
  Vec2 anchor = Vec2::Zero();  // center of an owned output cell
  TargetVector clean;
  TargetVector noisy;
};

struct Scene {
  Camera camera = Camera::identity();
  int image_width = 0;
  int image_height = 0;
  std::vector<SynthObject> objects;

  std::vector<Box3D> boxes() const;
};

/// Scene `index` of the stream defined by config.seed. Each scene draws from
/// its own generator seeded by (seed, index), so scenes can be produced in
/// any order. Throws Error(kRejectionOverflow) when an object cannot be
/// placed within max_tries.
Scene generate_scene(const SynthConfig& config, std::uint64_t index);

std::vector<Scene> generate_scenes(const SynthConfig& config, std::size_t count);

/// Adds N(0, sigma^2) to every target; sigma entries that are zero leave the
/// value untouched. The returned vector carries sigma (1 where zero).
TargetVector add_noise(const TargetVector& clean, const NoiseConfig& noise,
                       std::mt19937_64& rng);

/// Dense output-grid predictions for a scene: every owned support-region
/// cell scores `score` for its object's class and carries that object's
/// targets relative to the cell center. Noise is applied per cell.
DensePredictions dense_predictions(const SynthConfig& config, const Scene& scene,
                                   std::uint64_t index, double score = 0.95);

/// Candidate list: one per owned cell (scores in [0.75, 1)), plus
/// `clutter` low-score candidates (scores in [0.05, 0.6)) copied from random
/// objects at random cells. Deterministic in (config.seed, index).
std::vector<Candidate> synthesize_candidates(const SynthConfig& config, const Scene& scene,
                                             std::uint64_t index, int clutter = 4);

}  // namespace monobox
