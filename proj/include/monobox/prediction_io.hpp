#pragma once
// Plain-text interchange for raw per-pixel network outputs.
//
// One record per line, whitespace separated:
//   label score px py y_1 .. y_26 sigma_1 .. sigma_26
// i.e. a class label token followed by 55 reals. Lines starting with '#' and
// blank lines are ignored. Reals are written in shortest round-trip form.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "monobox/detection.hpp"

namespace monobox {

inline constexpr int kPredictionRecordReals = 3 + 2 * kNumTargets;

struct PredictionRecord {
  std::string label;
  double score = 0.0;
  Vec2 pixel = Vec2::Zero();
  TargetArray y = TargetArray::Zero();
  TargetArray sigma = TargetArray::Ones();
};

/// Throws Error(kMalformedLine) with the 1-based line number.
std::vector<PredictionRecord> parse_predictions(std::string_view text);
std::string emit_predictions(std::span<const PredictionRecord> records);

PredictionRecord record_from_candidate(const Candidate& candidate);
Candidate candidate_from_record(const PredictionRecord& record, const Camera& camera);

}  // namespace monobox
