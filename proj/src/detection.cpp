#include "monobox/detection.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace monobox {

Candidate make_candidate(std::string label, double score, const TargetVector& targets) {
  Candidate c;
  c.label = std::move(label);
  c.score = score;
  c.box2d = decode_box2d(targets.y, targets.context.pixel);
  c.targets = targets;
  return c;
}

std::vector<Candidate> threshold_candidates(std::vector<Candidate> candidates, double min_score) {
  std::erase_if(candidates, [min_score](const Candidate& c) { return !(c.score >= min_score); });
  return candidates;
}

std::vector<Candidate> nms(const std::vector<Candidate>& candidates, double iou_threshold) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });

  std::map<std::string, std::vector<std::size_t>> kept_per_label;
  std::vector<Candidate> out;
  for (std::size_t idx : order) {
    const Candidate& c = candidates[idx];
    auto& kept = kept_per_label[c.label];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou_2d(c.box2d, candidates[k].box2d) > iou_threshold;
    });
    if (suppressed) continue;
    kept.push_back(idx);
    out.push_back(c);
  }
  return out;
}

std::vector<Candidate> candidates_from_dense(const DensePredictions& dense, double min_score) {
  const std::size_t cells = static_cast<std::size_t>(dense.grid_w) * dense.grid_h;
  if (dense.scores.size() != dense.labels.size() || dense.y.size() != cells ||
      dense.sigma.size() != cells) {
    throw Error(ErrorCode::kInvalidArgument, "dense prediction maps have inconsistent sizes");
  }
  std::vector<Candidate> out;
  for (std::size_t c = 0; c < dense.labels.size(); ++c) {
    if (dense.scores[c].size() != cells) {
      throw Error(ErrorCode::kInvalidArgument, "score map size mismatch");
    }
    for (int cy = 0; cy < dense.grid_h; ++cy) {
      for (int cx = 0; cx < dense.grid_w; ++cx) {
        const std::size_t i = static_cast<std::size_t>(cy) * dense.grid_w + cx;
        const double s = dense.scores[c][i];
        if (!(s >= min_score)) continue;
        TargetVector t;
        t.y = dense.y[i];
        t.sigma = dense.sigma[i];
        t.context = TargetContext{cell_center(cx, cy, dense.stride), dense.camera};
        out.push_back(make_candidate(dense.labels[c], s, t));
      }
    }
  }
  return out;
}

PipelineReport run_pipeline(std::vector<Candidate> candidates, const PipelineConfig& config) {
  PipelineReport report;
  std::vector<Candidate> kept = threshold_candidates(std::move(candidates), config.score_threshold);
  report.after_threshold = kept.size();
  kept = nms(kept, config.nms_threshold);
  report.after_nms = kept.size();

  for (std::size_t i = 0; i < kept.size(); ++i) {
    try {
      const FitProblem problem = make_problem(kept[i].targets);
      const Box3D init = initialize(kept[i].targets, config.center_estimate);
      FitResult fit = solve(problem, init, config.solver, config.compute_covariance);
      if (!fit.converged) {
        report.failures.push_back({i, ErrorCode::kNotConverged, "solver did not converge"});
        continue;
      }
      report.detections.push_back({std::move(kept[i]), fit});
    } catch (const Error& e) {
      report.failures.push_back({i, e.code(), e.what()});
    }
  }
  return report;
}

PipelineReport run_pipeline(const DensePredictions& dense, const PipelineConfig& config) {
  return run_pipeline(candidates_from_dense(dense, config.score_threshold), config);
}

}  // namespace monobox
