#include "monobox/prediction_io.hpp"

#include <charconv>

#include "monobox/errors.hpp"

namespace monobox {
namespace {

void append_real(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.push_back(' ');
  out.append(buf, ptr);
}

}  // namespace

std::vector<PredictionRecord> parse_predictions(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;

    std::vector<std::string_view> tok;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      const std::size_t s = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > s) tok.push_back(line.substr(s, i - s));
    }
    if (tok.empty() || tok[0].front() == '#') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (tok.size() != 1 + kPredictionRecordReals) {
      throw Error(ErrorCode::kMalformedLine,
                  where + ": expected " + std::to_string(1 + kPredictionRecordReals) +
                      " fields, got " + std::to_string(tok.size()));
    }
    double v[kPredictionRecordReals];
    for (int k = 0; k < kPredictionRecordReals; ++k) {
      const std::string_view t = tok[1 + k];
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v[k]);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorCode::kMalformedLine, where + ": field " + std::to_string(k + 2) +
                                                   " is not a number");
      }
    }
    PredictionRecord r;
    r.label = std::string(tok[0]);
    r.score = v[0];
    r.pixel = Vec2(v[1], v[2]);
    for (int k = 0; k < kNumTargets; ++k) {
      r.y[k] = v[3 + k];
      r.sigma[k] = v[3 + kNumTargets + k];
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string emit_predictions(std::span<const PredictionRecord> records) {
  std::string out;
  for (const PredictionRecord& r : records) {
    out += r.label;
    append_real(out, r.score);
    append_real(out, r.pixel.x());
    append_real(out, r.pixel.y());
    for (int k = 0; k < kNumTargets; ++k) append_real(out, r.y[k]);
    for (int k = 0; k < kNumTargets; ++k) append_real(out, r.sigma[k]);
    out.push_back('\n');
  }
  return out;
}

PredictionRecord record_from_candidate(const Candidate& c) {
  return PredictionRecord{c.label, c.score, c.targets.context.pixel, c.targets.y, c.targets.sigma};
}

Candidate candidate_from_record(const PredictionRecord& r, const Camera& camera) {
  TargetVector t;
  t.y = r.y;
  t.sigma = r.sigma;
  t.context = TargetContext{r.pixel, camera};
  return make_candidate(r.label, r.score, t);
}

}  // namespace monobox
