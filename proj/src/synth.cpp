#include "monobox/synth.hpp"

#include <algorithm>
#include <cmath>

#include "monobox/errors.hpp"

namespace monobox {
namespace {

double round_cm(double v) { return std::round(v * 100.0) / 100.0; }

std::mt19937_64 scene_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

const ClassPrior& pick_class(const SynthConfig& config, std::mt19937_64& rng) {
  std::vector<double> weights;
  for (const ClassPrior& c : config.classes) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return config.classes[pick(rng)];
}

Box3D sample_box(const SynthConfig& config, const ClassPrior& prior, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Box3D b;
  b.h = prior.h * std::exp(prior.log_std * n01(rng));
  b.w = prior.w * std::exp(prior.log_std * n01(rng));
  b.l = prior.l * std::exp(prior.log_std * n01(rng));
  b.x = uniform(rng, config.x);
  b.y = uniform(rng, config.y);
  b.z = uniform(rng, config.z);
  b.theta = normalize_angle(uniform(rng, config.yaw));
  if (config.quantize) {
    b.h = std::max(0.01, round_cm(b.h));
    b.w = std::max(0.01, round_cm(b.w));
    b.l = std::max(0.01, round_cm(b.l));
    b.x = round_cm(b.x);
    b.z = round_cm(b.z);
    // Labels store the bottom face; keep that on the centimeter grid.
    b.y = round_cm(b.y + b.h / 2) - b.h / 2;
    b.theta = normalize_angle(round_cm(b.theta));
  }
  return b;
}

int grid_size(int pixels, double stride) {
  return static_cast<int>(std::ceil(pixels / stride));
}

std::vector<int> ownership(const SynthConfig& config, const std::vector<SynthObject>& objects) {
  std::vector<SupportRegion> regions;
  std::vector<double> distances;
  for (std::size_t id = 0; id < objects.size(); ++id) {
    regions.push_back(objects[id].region);
    regions.back().object_id = static_cast<int>(id);
    distances.push_back(objects[id].box.center().norm());
  }
  return rasterize_support_regions(regions, distances, grid_size(config.image_width, config.stride),
                                   grid_size(config.image_height, config.stride));
}

std::vector<std::pair<int, int>> owned_cells(const SynthConfig& config,
                                             const std::vector<int>& owner, int id) {
  const int gw = grid_size(config.image_width, config.stride);
  std::vector<std::pair<int, int>> cells;
  for (std::size_t k = 0; k < owner.size(); ++k) {
    if (owner[k] == id) cells.emplace_back(static_cast<int>(k) % gw, static_cast<int>(k) / gw);
  }
  return cells;
}

bool placeable(const SynthConfig& config, const std::vector<SynthObject>& placed,
               const SynthObject& candidate) {
  for (const Vec3& c : box_corners(candidate.box)) {
    if (point_depth(config.camera, c) <= 1.0) return false;
  }
  const Box2D& e = candidate.box2d;
  if (e.x1 < 0.0 || e.y1 < 0.0 || e.x2 > config.image_width || e.y2 > config.image_height) {
    return false;
  }
  for (const SynthObject& o : placed) {
    if (bev_intersection_area(o.box, candidate.box) > 0.0) return false;
    if (iou_2d(o.box2d, e) > config.max_box2d_iou) return false;
  }
  std::vector<SynthObject> all = placed;
  all.push_back(candidate);
  const std::vector<int> owner = ownership(config, all);
  for (std::size_t id = 0; id < all.size(); ++id) {
    if (std::find(owner.begin(), owner.end(), static_cast<int>(id)) == owner.end()) return false;
  }
  return true;
}

TargetVector targets_at(const SynthObject& o, const Camera& camera, const Vec2& pixel) {
  TargetVector t;
  t.context = TargetContext{pixel, camera};
  t.y = encode(o.box, o.box2d, t.context);
  return t;
}

}  // namespace

TargetArray NoiseConfig::sigma() const {
  TargetArray s;
  s.segment<4>(target_index::kDeltaC).setConstant(delta_c);
  s[target_index::kDistance] = distance;
  s.segment<2>(target_index::kSinAlpha).setConstant(orientation);
  s.segment<3>(target_index::kLogDims).setConstant(log_dims);
  s.segment<16>(target_index::kCorners).setConstant(corners);
  return s;
}

Camera kitti_reference_camera() {
  Mat34 p;
  p << 721.5377, 0.0, 609.5593, 44.85728,
       0.0, 721.5377, 172.854, 0.2163791,
       0.0, 0.0, 1.0, 0.002745884;
  return Camera(p);
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (min_objects < 0 || max_objects < min_objects) fail("object count range is empty");
  if (!x.valid() || !y.valid() || !z.valid() || !yaw.valid()) fail("empty spatial range");
  if (z.lo <= 0.0) fail("z range must be in front of the camera");
  if (classes.empty()) fail("no classes");
  for (const ClassPrior& c : classes) {
    if (!(c.weight > 0.0 && c.h > 0.0 && c.w > 0.0 && c.l > 0.0 && c.log_std >= 0.0)) {
      fail("invalid prior for class " + c.label);
    }
  }
  if ((noise.sigma().array() < 0.0).any()) fail("negative noise sigma");
  if (image_width <= 0 || image_height <= 0 || !(stride > 0.0)) fail("invalid image geometry");
  if (max_tries <= 0) fail("max_tries must be positive");
}

std::vector<Box3D> Scene::boxes() const {
  std::vector<Box3D> out;
  for (const SynthObject& o : objects) out.push_back(o.box);
  return out;
}

TargetVector add_noise(const TargetVector& clean, const NoiseConfig& noise,
                       std::mt19937_64& rng) {
  const TargetArray s = noise.sigma();
  std::normal_distribution<double> n01(0.0, 1.0);
  TargetVector out = clean;
  for (int i = 0; i < kNumTargets; ++i) {
    const double e = n01(rng);
    if (s[i] > 0.0) {
      out.y[i] += s[i] * e;
      out.sigma[i] = s[i];
    } else {
      out.sigma[i] = 1.0;
    }
  }
  return out;
}

Scene generate_scene(const SynthConfig& config, std::uint64_t index) {
  config.validate();
  std::mt19937_64 rng = scene_rng(config.seed, index, 0);
  Scene scene;
  scene.camera = config.camera;
  scene.image_width = config.image_width;
  scene.image_height = config.image_height;

  const int count =
      std::uniform_int_distribution<int>(config.min_objects, config.max_objects)(rng);
  std::vector<SynthObject> placed;
  for (int k = 0; k < count; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < config.max_tries && !ok; ++attempt) {
      const ClassPrior& prior = pick_class(config, rng);
      SynthObject o;
      o.label = prior.label;
      o.box = sample_box(config, prior, rng);
      try {
        o.box2d = projected_envelope(config.camera, o.box);
      } catch (const Error&) {
        continue;
      }
      o.region = support_region(o.box2d, k, config.stride);
      if (placeable(config, placed, o)) {
        placed.push_back(std::move(o));
        ok = true;
      }
    }
    if (!ok) {
      throw Error(ErrorCode::kRejectionOverflow,
                  "object " + std::to_string(k) + " of scene " + std::to_string(index) +
                      " not placed in " + std::to_string(config.max_tries) + " tries");
    }
  }

  // Anchors and noise are drawn after placement, so they only depend on the
  // final layout.
  const std::vector<int> owner = ownership(config, placed);
  for (std::size_t id = 0; id < placed.size(); ++id) {
    SynthObject& o = placed[id];
    const auto cells = owned_cells(config, owner, static_cast<int>(id));
    const auto [cx, cy] =
        cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
    o.anchor = cell_center(cx, cy, config.stride);
    o.clean = targets_at(o, config.camera, o.anchor);
    o.noisy = add_noise(o.clean, config.noise, rng);
  }
  scene.objects = std::move(placed);
  return scene;
}

std::vector<Scene> generate_scenes(const SynthConfig& config, std::size_t count) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(config, i));
  return out;
}

DensePredictions dense_predictions(const SynthConfig& config, const Scene& scene,
                                   std::uint64_t index, double score) {
  std::mt19937_64 rng = scene_rng(config.seed, index, 1);
  DensePredictions d;
  d.grid_w = grid_size(config.image_width, config.stride);
  d.grid_h = grid_size(config.image_height, config.stride);
  d.stride = config.stride;
  d.camera = scene.camera;
  for (const ClassPrior& c : config.classes) d.labels.push_back(c.label);
  const std::size_t n = static_cast<std::size_t>(d.grid_w) * d.grid_h;
  d.scores.assign(d.labels.size(), std::vector<double>(n, 0.0));
  d.y.assign(n, TargetArray::Zero());
  d.sigma.assign(n, TargetArray::Ones());

  const std::vector<int> owner = ownership(config, scene.objects);
  for (std::size_t k = 0; k < n; ++k) {
    if (owner[k] < 0) continue;
    const SynthObject& o = scene.objects[owner[k]];
    const int cx = static_cast<int>(k) % d.grid_w;
    const int cy = static_cast<int>(k) / d.grid_w;
    const TargetVector t =
        add_noise(targets_at(o, scene.camera, cell_center(cx, cy, d.stride)), config.noise, rng);
    d.y[k] = t.y;
    d.sigma[k] = t.sigma;
    const auto cls = std::find(d.labels.begin(), d.labels.end(), o.label) - d.labels.begin();
    d.scores[cls][k] = score;
  }
  return d;
}

std::vector<Candidate> synthesize_candidates(const SynthConfig& config, const Scene& scene,
                                             std::uint64_t index, int clutter) {
  std::mt19937_64 rng = scene_rng(config.seed, index, 2);
  std::uniform_real_distribution<double> high(0.75, 1.0);
  std::uniform_real_distribution<double> low(0.05, 0.6);
  std::vector<Candidate> out;
  const std::vector<int> owner = ownership(config, scene.objects);
  for (std::size_t id = 0; id < scene.objects.size(); ++id) {
    const SynthObject& o = scene.objects[id];
    for (const auto& [cx, cy] : owned_cells(config, owner, static_cast<int>(id))) {
      const TargetVector t = add_noise(
          targets_at(o, scene.camera, cell_center(cx, cy, config.stride)), config.noise, rng);
      out.push_back(make_candidate(o.label, high(rng), t));
    }
  }
  if (!scene.objects.empty()) {
    const int gw = grid_size(config.image_width, config.stride);
    const int gh = grid_size(config.image_height, config.stride);
    for (int k = 0; k < clutter; ++k) {
      const auto pick =
          std::uniform_int_distribution<std::size_t>(0, scene.objects.size() - 1)(rng);
      const SynthObject& o = scene.objects[pick];
      const int cx = std::uniform_int_distribution<int>(0, gw - 1)(rng);
      const int cy = std::uniform_int_distribution<int>(0, gh - 1)(rng);
      const TargetVector t = add_noise(
          targets_at(o, scene.camera, cell_center(cx, cy, config.stride)), config.noise, rng);
      out.push_back(make_candidate(o.label, low(rng), t));
    }
  }
  return out;
}

}  // namespace monobox
