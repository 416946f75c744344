// Command-line front end: synth, fit, eval, gradcheck, train-toy.
//
// Exit codes: 0 success, 1 data error (unreadable or malformed input, failed
// checks), 2 usage error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradcheck.hpp"
#include "monobox/detection.hpp"
#include "monobox/errors.hpp"
#include "monobox/kitti_io.hpp"
#include "monobox/metrics.hpp"
#include "monobox/prediction_io.hpp"
#include "monobox/synth.hpp"
#include "monobox/training.hpp"

namespace fs = std::filesystem;
using namespace monobox;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

// Sorted *.txt files of a directory, by stem.
std::vector<fs::path> list_txt(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string frame_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

// Per-group noise profile, multiplied by --noise.
NoiseConfig noise_profile(double scale) {
  return NoiseConfig{1.0 * scale, 0.1 * scale, 0.02 * scale, 0.02 * scale, 1.0 * scale};
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t count = 10;
  double noise = 0.0;
  int clutter = 4;
  std::string out_dir;
};

int run_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.noise = noise_profile(a.noise);
  const fs::path root(a.out_dir);
  for (const char* sub : {"label_2", "calib", "predictions"}) ensure_dir(root / sub);
  std::size_t objects = 0;
  for (std::size_t i = 0; i < a.count; ++i) {
    const Scene scene = generate_scene(cfg, i);
    std::vector<KittiLabel> labels;
    for (const SynthObject& o : scene.objects) {
      KittiLabel k = KittiLabel::from_box(o.label, o.box, o.box2d);
      labels.push_back(k);
    }
    std::vector<PredictionRecord> records;
    for (const Candidate& c : synthesize_candidates(cfg, scene, i, a.clutter)) {
      records.push_back(record_from_candidate(c));
    }
    const std::string name = frame_name(i) + ".txt";
    write_file(root / "label_2" / name, emit_kitti_labels(labels));
    write_file(root / "calib" / name, emit_kitti_calib(scene.camera));
    write_file(root / "predictions" / name,
               "# label score px py y[26] sigma[26]\n" + emit_predictions(records));
    objects += scene.objects.size();
  }
  std::cout << "wrote " << a.count << " scenes, " << objects << " objects to " << a.out_dir
            << "\n";
  return 0;
}

struct FitArgs {
  std::string pred_dir, calib_dir, out_dir;
  double score_thresh = kDefaultScoreThreshold;
  double nms_thresh = kDefaultNmsThreshold;
};

int run_fit(const FitArgs& a) {
  ensure_dir(a.out_dir);
  PipelineConfig cfg;
  cfg.score_threshold = a.score_thresh;
  cfg.nms_threshold = a.nms_thresh;
  std::size_t detections = 0, failures = 0;
  for (const fs::path& pred : list_txt(a.pred_dir)) {
    const fs::path calib = fs::path(a.calib_dir) / pred.filename();
    const Camera camera = parse_kitti_calib(read_file(calib));
    std::vector<Candidate> candidates;
    for (const PredictionRecord& r : parse_predictions(read_file(pred))) {
      candidates.push_back(candidate_from_record(r, camera));
    }
    const PipelineReport report = run_pipeline(std::move(candidates), cfg);
    write_file(fs::path(a.out_dir) / pred.filename(), emit_kitti_predictions(report.detections));
    detections += report.detections.size();
    failures += report.failures.size();
    for (const PipelineFailure& f : report.failures) {
      std::cerr << pred.filename().string() << ": candidate " << f.candidate << ": "
                << f.message << "\n";
    }
  }
  std::cout << "fitted " << detections << " detections (" << failures << " failed)\n";
  return 0;
}

struct EvalArgs {
  std::string gt_dir, det_dir;
  std::string criterion = "3d";
  double iou_thresh = 0.7;
  double loc_thresh = 1.0;
  std::string difficulty = "none";
  int points = 11;
};

EvalObject eval_object(const KittiLabel& k) {
  EvalObject o;
  o.label = k.type;
  o.score = k.score.value_or(1.0);
  o.box2d = k.bbox;
  o.box = k.box();
  o.alpha = k.alpha;
  o.ignore = k.type == "DontCare";
  o.truncation = k.truncated;
  o.occlusion = k.occluded;
  return o;
}

int run_eval(const EvalArgs& a) {
  static const std::map<std::string, CriterionKind> kinds = {
      {"2d", CriterionKind::kIou2D},   {"iou2d", CriterionKind::kIou2D},
      {"bev", CriterionKind::kIouBev}, {"ioubev", CriterionKind::kIouBev},
      {"3d", CriterionKind::kIou3D},   {"iou3d", CriterionKind::kIou3D},
      {"alp", CriterionKind::kAlp}};
  EvalCriterion crit;
  crit.kind = kinds.at(a.criterion);
  crit.iou_threshold = a.iou_thresh;
  crit.localization_threshold = a.loc_thresh;
  crit.validate();
  const Interpolation interp = a.points == 40 ? Interpolation::k40Point : Interpolation::k11Point;

  std::vector<ImageEval> images;
  std::vector<std::string> classes;
  for (const fs::path& gt : list_txt(a.gt_dir)) {
    ImageEval img;
    for (const KittiLabel& k : parse_kitti_labels(read_file(gt))) {
      img.ground_truth.push_back(eval_object(k));
      if (k.type != "DontCare" &&
          std::find(classes.begin(), classes.end(), k.type) == classes.end()) {
        classes.push_back(k.type);
      }
    }
    const fs::path det = fs::path(a.det_dir) / gt.filename();
    if (fs::exists(det)) {
      for (const KittiLabel& k : parse_kitti_labels(read_file(det))) {
        img.detections.push_back(eval_object(k));
      }
    }
    images.push_back(std::move(img));
  }
  if (a.difficulty != "none") {
    const Difficulty d = a.difficulty == "easy"       ? Difficulty::kEasy
                         : a.difficulty == "moderate" ? Difficulty::kModerate
                                                      : Difficulty::kHard;
    images = apply_difficulty(images, difficulty_level(d));
  }
  std::sort(classes.begin(), classes.end());

  std::printf("%-12s %8s %8s %8s\n", "class", "AP", "AOS", "ALP");
  for (const std::string& cls : classes) {
    const std::vector<ImageEval> sub = filter_label(images, cls);
    const double ap = average_precision(sub, crit, interp);
    const double aos = average_orientation_similarity(sub, crit.iou_threshold, interp);
    const double alp = average_localization_precision(sub, crit.localization_threshold,
                                                      crit.iou_threshold, interp);
    std::printf("%-12s %8.4f %8.4f %8.4f\n", cls.c_str(), ap, aos, alp);
  }
  return 0;
}

int run_gradcheck(std::uint64_t seed, int configs) {
  bool ok = true;
  for (const tools::CheckResult& r : tools::run_gradchecks(seed, configs)) {
    std::printf("%-4s %-55s error %.3e (tol %.0e, %d cases)\n", r.passed() ? "ok" : "FAIL",
                r.name.c_str(), r.error, r.tolerance, r.cases);
    ok = ok && r.passed();
  }
  return ok ? 0 : kExitData;
}

struct TrainArgs {
  std::uint64_t seed = 1;
  int pretrain_steps = 300;
  int steps = 100;
  int hidden = 0;
  double lr = 2e-3;
  std::string out_dir;
};

int run_train(const TrainArgs& a) {
  TrainToyConfig cfg;
  cfg.seed = a.seed;
  cfg.data.synth.seed = a.seed;
  cfg.hidden_width = a.hidden;
  cfg.method2_steps = a.pretrain_steps;
  cfg.method3_steps = a.steps;
  cfg.method3_learning_rate = a.lr;
  const TrainToyResult r = train_toy(cfg);
  std::printf("method2 loss %.6f -> %.6f\n", r.method2_loss.front(), r.method2_loss.back());
  std::printf("step  L_IoU\n");
  for (std::size_t i = 0; i < r.iou_loss.size(); ++i) std::printf("%4zu  %.6f\n", i, r.iou_loss[i]);
  const double first = r.iou_loss.front(), last = r.iou_loss.back();
  std::printf("L_IoU %.6f -> %.6f (%.1f%% reduction)\n", first, last,
              first > 0.0 ? 100.0 * (first - last) / first : 0.0);
  if (!a.out_dir.empty()) {
    ensure_dir(a.out_dir);
    std::ostringstream csv;
    csv << "phase,step,loss\n";
    for (std::size_t i = 0; i < r.method2_loss.size(); ++i) csv << "method2," << i << ',' << r.method2_loss[i] << '\n';
    for (std::size_t i = 0; i < r.iou_loss.size(); ++i) csv << "method3," << i << ',' << r.iou_loss[i] << '\n';
    write_file(fs::path(a.out_dir) / "loss_curve.csv", csv.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular 3D box fitting toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* sc_synth = app.add_subcommand("synth", "write a synthetic dataset");
  sc_synth->add_option("--seed", synth.seed, "RNG seed");
  sc_synth->add_option("--count", synth.count, "number of scenes")->check(CLI::PositiveNumber);
  sc_synth->add_option("--noise", synth.noise, "multiplier on the target noise profile")
      ->check(CLI::NonNegativeNumber);
  sc_synth->add_option("--clutter", synth.clutter, "low-score candidates per scene")
      ->check(CLI::NonNegativeNumber);
  sc_synth->add_option("--out-dir", synth.out_dir, "output directory")->required();

  FitArgs fit;
  auto* sc_fit = app.add_subcommand("fit", "fit boxes to raw predictions");
  sc_fit->add_option("--pred-dir", fit.pred_dir, "prediction records")->required();
  sc_fit->add_option("--calib-dir", fit.calib_dir, "KITTI calib files")->required();
  sc_fit->add_option("--out-dir", fit.out_dir, "KITTI-format output")->required();
  sc_fit->add_option("--score-thresh", fit.score_thresh, "minimum class score")
      ->check(CLI::Range(0.0, 1.0));
  sc_fit->add_option("--nms-thresh", fit.nms_thresh, "NMS 2D IoU threshold")
      ->check(CLI::Range(0.0, 1.0));

  EvalArgs ev;
  auto* sc_eval = app.add_subcommand("eval", "AP / AOS / ALP of detections against labels");
  sc_eval->add_option("--gt-dir", ev.gt_dir, "ground-truth labels")->required();
  sc_eval->add_option("--det-dir", ev.det_dir, "detections")->required();
  sc_eval->add_option("--criterion", ev.criterion, "2d, bev, 3d or alp")
      ->check(CLI::IsMember({"2d", "bev", "3d", "alp", "iou2d", "ioubev", "iou3d"}));
  sc_eval->add_option("--iou-thresh,--thresh", ev.iou_thresh, "IoU threshold")
      ->check(CLI::Range(0.0, 1.0));
  sc_eval->add_option("--loc-thresh", ev.loc_thresh, "ALP center distance (m)")
      ->check(CLI::PositiveNumber);
  sc_eval->add_option("--difficulty", ev.difficulty, "none, easy, moderate or hard")
      ->check(CLI::IsMember({"none", "easy", "moderate", "hard"}));
  sc_eval->add_option("--points", ev.points, "interpolation points")->check(CLI::IsMember({11, 40}));

  std::uint64_t gc_seed = 0;
  int gc_configs = 100;
  auto* sc_grad = app.add_subcommand("gradcheck", "finite-difference verification suites");
  sc_grad->add_option("--seed", gc_seed, "RNG seed");
  sc_grad->add_option("--configs", gc_configs, "random configurations per suite")
      ->check(CLI::PositiveNumber);

  TrainArgs tr;
  auto* sc_train = app.add_subcommand("train-toy", "toy regressor: regression pretraining, IoU fine-tuning");
  sc_train->add_option("--seed", tr.seed, "RNG seed");
  sc_train->add_option("--pretrain-steps", tr.pretrain_steps)->check(CLI::NonNegativeNumber);
  sc_train->add_option("--steps", tr.steps, "fine-tuning steps")->check(CLI::NonNegativeNumber);
  sc_train->add_option("--hidden", tr.hidden, "tanh hidden width, 0 for affine")
      ->check(CLI::NonNegativeNumber);
  sc_train->add_option("--lr", tr.lr, "fine-tuning learning rate")->check(CLI::PositiveNumber);
  sc_train->add_option("--out-dir", tr.out_dir, "write loss_curve.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sc_synth) return run_synth(synth);
    if (*sc_fit) return run_fit(fit);
    if (*sc_eval) return run_eval(ev);
    if (*sc_grad) return run_gradcheck(gc_seed, gc_configs);
    if (*sc_train) return run_train(tr);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kExitUsage : kExitData;
  }
  return kExitUsage;
}
