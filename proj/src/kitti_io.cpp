#include "monobox/kitti_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "monobox/errors.hpp"
#include "monobox/targets.hpp"

namespace monobox {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Box3D KittiLabel::box() const {
  return Box3D{h, w, l, x, y - 0.5 * h, z, normalize_angle(rotation_y)};
}

KittiLabel KittiLabel::from_box(std::string type, const Box3D& box, const Box2D& bbox,
                                std::optional<double> score) {
  KittiLabel k;
  k.type = std::move(type);
  k.alpha = observation_angle(box);
  k.bbox = bbox;
  k.h = box.h;
  k.w = box.w;
  k.l = box.l;
  k.x = box.x;
  k.y = box.y + 0.5 * box.h;
  k.z = box.z;
  k.rotation_y = normalize_angle(box.theta);
  k.score = score;
  return k;
}

std::vector<KittiLabel> parse_kitti_labels(std::string_view text) {
  std::vector<KittiLabel> out;
  const auto lines = lines_of(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto tok = split_ws(lines[n]);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(n + 1);
    if (tok.size() != 15 && tok.size() != 16) {
      throw Error(ErrorCode::kMalformedLine,
                  where + ": expected 15 or 16 fields, got " + std::to_string(tok.size()));
    }
    KittiLabel k;
    k.type = std::string(tok[0]);
    double v[15];
    bool ok = parse_number(tok[1], v[1]) && parse_number(tok[2], k.occluded);
    if (!ok) {
      // Some writers emit occlusion as a float ("-1.00").
      double occ = 0.0;
      ok = parse_number(tok[1], v[1]) && parse_number(tok[2], occ);
      k.occluded = static_cast<int>(occ);
    }
    for (int i = 3; i < 15 && ok; ++i) ok = parse_number(tok[i], v[i]);
    double score = 0.0;
    if (ok && tok.size() == 16) {
      ok = parse_number(tok[15], score);
      k.score = score;
    }
    if (!ok) throw Error(ErrorCode::kMalformedLine, where + ": non-numeric field");
    k.truncated = v[1];
    k.alpha = v[3];
    k.bbox = Box2D{v[4], v[5], v[6], v[7]};
    k.h = v[8];
    k.w = v[9];
    k.l = v[10];
    k.x = v[11];
    k.y = v[12];
    k.z = v[13];
    k.rotation_y = v[14];
    out.push_back(std::move(k));
  }
  return out;
}

std::string emit_kitti_labels(std::span<const KittiLabel> labels) {
  std::string out;
  char buf[512];
  for (const KittiLabel& k : labels) {
    int n = std::snprintf(buf, sizeof(buf),
                          "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f",
                          k.type.c_str(), k.truncated, k.occluded, k.alpha, k.bbox.x1, k.bbox.y1,
                          k.bbox.x2, k.bbox.y2, k.h, k.w, k.l, k.x, k.y, k.z, k.rotation_y);
    out.append(buf, static_cast<std::size_t>(n));
    if (k.score) {
      n = std::snprintf(buf, sizeof(buf), " %.2f", *k.score);
      out.append(buf, static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  return out;
}

Camera parse_kitti_calib(std::string_view text) {
  const auto lines = lines_of(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto tok = split_ws(lines[n]);
    if (tok.empty() || tok[0] != "P2:") continue;
    if (tok.size() != 13) {
      throw Error(ErrorCode::kMalformedLine,
                  "line " + std::to_string(n + 1) + ": P2 needs 12 values");
    }
    Mat34 p;
    for (int i = 0; i < 12; ++i) {
      double v = 0.0;
      if (!parse_number(tok[1 + i], v)) {
        throw Error(ErrorCode::kMalformedLine,
                    "line " + std::to_string(n + 1) + ": non-numeric P2 entry");
      }
      p(i / 4, i % 4) = v;
    }
    return Camera(p);
  }
  throw Error(ErrorCode::kMissingP2, "no P2: line in calibration");
}

std::string emit_kitti_calib(const Camera& camera) {
  std::string out = "P2:";
  for (int i = 0; i < 12; ++i) {
    out += ' ';
    out += shortest(camera.projection()(i / 4, i % 4));
  }
  out += '\n';
  return out;
}

KittiLabel label_from_detection(const Detection& detection) {
  KittiLabel k = KittiLabel::from_box(detection.candidate.label, detection.fit.box,
                                      detection.candidate.box2d, detection.candidate.score);
  k.truncated = -1.0;
  k.occluded = -1;
  return k;
}

std::string emit_kitti_predictions(std::span<const Detection> detections) {
  std::vector<KittiLabel> labels;
  labels.reserve(detections.size());
  for (const Detection& d : detections) labels.push_back(label_from_detection(d));
  return emit_kitti_labels(labels);
}

}  // namespace monobox
