#pragma once
// Per-image post-processing: score threshold, greedy per-class NMS, then an
// independent box fit per surviving candidate.

#include <string>
#include <vector>

#include "monobox/errors.hpp"
#include "monobox/fitting.hpp"

namespace monobox {

inline constexpr double kDefaultScoreThreshold = 0.7;
inline constexpr double kDefaultNmsThreshold = 0.3;

struct Candidate {
  std::string label;
  double score = 0.0;
  Box2D box2d;
  TargetVector targets;
};

struct Detection {
  Candidate candidate;
  FitResult fit;
};

/// Candidate whose 2D box is decoded from its anchor pixel and delta targets.
Candidate make_candidate(std::string label, double score, const TargetVector& targets);

/// Keeps candidates with score >= min_score, preserving order.
std::vector<Candidate> threshold_candidates(std::vector<Candidate> candidates,
                                            double min_score = kDefaultScoreThreshold);

/// Greedy NMS, independently per label: visit candidates by descending score
/// (stable in input order) and drop any whose 2D IoU with an already kept
/// candidate of the same label exceeds iou_threshold. Output is in visit order.
std::vector<Candidate> nms(const std::vector<Candidate>& candidates,
                           double iou_threshold = kDefaultNmsThreshold);

/// Dense per-pixel network output on a grid_w x grid_h output grid.
struct DensePredictions {
  int grid_w = 0;
  int grid_h = 0;
  double stride = kOutputStride;
  Camera camera = Camera::identity();
  std::vector<std::string> labels;  // one per class score map
  // scores[c][cy * grid_w + cx]; y / sigma are per cell.
  std::vector<std::vector<double>> scores;
  std::vector<TargetArray> y;
  std::vector<TargetArray> sigma;
};

/// One candidate per (class, cell) with the cell center as anchor pixel.
/// Cells below `min_score` are skipped.
std::vector<Candidate> candidates_from_dense(const DensePredictions& dense, double min_score);

struct PipelineConfig {
  double score_threshold = kDefaultScoreThreshold;
  double nms_threshold = kDefaultNmsThreshold;
  bool compute_covariance = true;
  CenterEstimate center_estimate = CenterEstimate::kCornerDiagonals;
  SolverOptions solver;
};

struct PipelineFailure {
  std::size_t candidate = 0;  // index into the post-NMS list
  ErrorCode code = ErrorCode::kNotConverged;
  std::string message;
};

struct PipelineReport {
  std::vector<Detection> detections;
  std::vector<PipelineFailure> failures;
  std::size_t after_threshold = 0;
  std::size_t after_nms = 0;
};

/// threshold -> NMS -> initialize -> solve (-> covariance). Failures of
/// individual candidates are collected, never thrown; non-converged fits are
/// reported as kNotConverged and not returned as detections.
PipelineReport run_pipeline(std::vector<Candidate> candidates, const PipelineConfig& config = {});
PipelineReport run_pipeline(const DensePredictions& dense, const PipelineConfig& config = {});

}  // namespace monobox
