// saved: synthesize, train, denoise and evaluate low-SNR video clips.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "saved/checkpoint.hpp"
#include "saved/compose.hpp"
#include "saved/gradcheck.hpp"
#include "saved/io.hpp"
#include "saved/metrics.hpp"
#include "saved/synth.hpp"
#include "saved/targets.hpp"
#include "saved/trainer.hpp"

namespace fs = std::filesystem;
using namespace saved;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Contract violations detected after parsing (bad flag combinations).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Accepts every name parse_target_kind does; the error lists the valid names.
const CLI::Validator kTargetName(
    [](std::string& name) -> std::string {
      try {
        parse_target_kind(name);
        return {};
      } catch (const std::invalid_argument& e) {
        return e.what();
      }
    },
    "TARGET");

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string fmt(double v) { return std::isinf(v) ? (v > 0 ? "inf" : "-inf") : format_double(v); }

// ---- synth ----

struct SynthArgs {
  SynthConfig cfg;
  std::string noise = "gaussian";
  double noise_level = 0.15;
  std::string out;
};

int run_synth(SynthArgs& a) {
  if (a.noise == "gaussian") {
    a.cfg.noise = GaussianNoise{a.noise_level};
  } else if (a.noise == "speckle") {
    a.cfg.noise = SpeckleNoise{a.noise_level};
  } else {
    a.cfg.noise = PinkNoise{a.noise_level};
  }
  const SynthOutput s = generate(a.cfg);
  const fs::path out(a.out);
  save_clip(s.clean, out / "clean");
  save_clip(s.noisy, out / "noisy");
  save_annotations(s.annotations, out / "annotations.csv");
  // Measured on the quantized frames that were written.
  const QualityReport q = quality(load_clip(out / "clean"), load_clip(out / "noisy"));
  std::cout << "frames=" << s.clean.size() << " boxes=" << s.annotations.size() << '\n';
  std::cout << "psnr_noisy_vs_clean=" << fmt(q.clip_psnr) << '\n';
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::vector<std::string> data;
  std::string target = "pfdwt1";
  int epochs = 20;
  int batch_size = 4;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::uint32_t base_channels = 8;
  std::uint32_t max_channels = 128;
  std::uint32_t stages = 5;
  std::uint32_t stride = 1;
  bool no_clamp_target = false;
  std::string out;
  std::string report;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.target = parse_target_kind(a.target);
  cfg.clamp_target = !a.no_clamp_target;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.model = ModelConfig{a.base_channels, a.max_channels, a.stages, a.stride, true};
  cfg.checkpoint_path = a.out;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<Clip> clips;
  for (const std::string& d : a.data) clips.push_back(load_clip(d));
  const fs::path ckpt(a.out);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());

  TrainResult result = train(clips, cfg, [](const EpochStats& e) {
    std::cout << "epoch " << e.epoch << " loss=" << format_double(e.loss) << " seconds=" << e.seconds << std::endl;
  });
  const fs::path report = a.report.empty() ? ckpt.parent_path() / "train_report.csv" : fs::path(a.report);
  write_train_report(result.report, report);
  std::cout << "checkpoint=" << ckpt.string() << " report=" << report.string() << '\n';
  return 0;
}

// ---- denoise ----

int run_denoise(const std::string& ckpt, const std::string& in, const std::string& out) {
  const Checkpoint c = load_checkpoint(ckpt);
  const Clip clip = load_clip(in);
  const Clip den = denoise_clip(c, clip);
  save_clip(den, out);
  std::cout << "frames=" << den.size() << '\n';
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string mode;
  std::string in;
  std::string clean;
  std::string ann;
  std::string out;
  std::size_t bins = kDefaultBins;
  double threshold = 0.5;
  int min_area = 6;
  double iou = 0.5;
};

std::string format_detection(const DetectionCounts& c) {
  std::ostringstream s;
  s << "true_positives=" << c.true_positives << '\n'
    << "false_positives=" << c.false_positives << '\n'
    << "false_negatives=" << c.false_negatives << '\n'
    << "precision=" << fmt(c.precision()) << '\n'
    << "recall=" << fmt(c.recall()) << '\n';
  return s.str();
}

int run_eval(const EvalArgs& a) {
  if ((a.mode == "fbd" || a.mode == "detect") && a.ann.empty()) throw UsageError("--mode " + a.mode + " needs --ann");
  if (a.mode == "psnr" && a.clean.empty()) throw UsageError("--mode psnr needs --clean");
  const Clip clip = load_clip(a.in);
  std::string text;
  if (a.mode == "fbd") {
    const FbdReport r = fbd(clip, load_annotations(a.ann), a.bins);
    text = format_fbd_report(r);
    std::cout << "mean_fbd=" << fmt(r.mean) << " evaluated=" << r.evaluated << " skipped=" << r.skipped << '\n';
  } else if (a.mode == "psnr") {
    const QualityReport r = quality(load_clip(a.clean), clip);
    text = format_quality_report(r);
    std::cout << "mean_psnr=" << fmt(r.mean_psnr) << " mean_ssim=" << fmt(r.mean_ssim) << '\n';
  } else {
    const DetectionCounts c = evaluate_detection(clip, load_annotations(a.ann), a.threshold, a.min_area, a.iou);
    text = format_detection(c);
    std::cout << "precision=" << fmt(c.precision()) << " recall=" << fmt(c.recall()) << '\n';
  }
  write_text(a.out, text);
  return 0;
}

// ---- gradcheck ----

int run_gradcheck_cmd(const GradcheckOptions& opt) {
  bool ok = true;
  std::printf("%-20s %12s %8s %6s  %s\n", "op", "max_rel_err", "checked", "kinks", "status");
  for (const GradcheckResult& r : run_gradcheck(opt)) {
    std::printf("%-20s %12.3e %8zu %6zu  %s\n", r.op.c_str(), r.max_rel_error, r.checked, r.kinks,
                r.passed ? "ok" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("gradcheck %s (tolerance %.0e)\n", ok ? "passed" : "FAILED", opt.tolerance);
  return ok ? 0 : kExitRuntime;
}

// ---- compare ----

int run_compare(const std::string& raw_dir, const std::string& den_dir, const std::string& ann,
                const std::string& clean_dir) {
  if (!fs::exists(ann)) throw std::runtime_error("annotation file not found: " + ann);
  const std::vector<BoxAnnotation> boxes = load_annotations(ann);
  const Clip raw = load_clip(raw_dir);
  const Clip den = load_clip(den_dir);
  std::optional<Clip> clean;
  if (!clean_dir.empty()) clean = load_clip(clean_dir);

  std::printf("%-10s %12s", "input", "fbd");
  if (clean) std::printf(" %10s %8s", "psnr", "ssim");
  std::printf("\n");
  for (const auto& [name, clip] : {std::pair<const char*, const Clip*>{"raw", &raw}, {"denoised", &den}}) {
    std::printf("%-10s %12s", name, fmt(fbd(*clip, boxes).mean).c_str());
    if (clean) {
      const QualityReport q = quality(*clean, *clip);
      std::printf(" %10s %8s", fmt(q.clip_psnr).c_str(), fmt(q.mean_ssim).c_str());
    }
    std::printf("\n");
  }
  return 0;
}

// ---- target / compose ----

int run_target(const std::string& in, const std::string& name, const std::string& out, bool no_clamp) {
  const Clip clip = load_clip(in);
  const TargetKind kind = parse_target_kind(name);
  const TemporalReach reach = temporal_reach(kind);
  if (clip.size() < reach.past + reach.future + 1) throw std::runtime_error("clip too short for target " + name);
  TargetBuilder build(clip, kind, !no_clamp);
  std::vector<Frame> frames;
  for (std::size_t t = reach.past; t + reach.future < clip.size(); ++t) frames.push_back(Frame::clamped(build(t)));
  save_clip(Clip(std::move(frames), clip.fps(), clip.source_id()), out);
  std::cout << "first_frame=" << reach.past << " frames=" << clip.size() - reach.past - reach.future << '\n';
  return 0;
}

int run_compose(const std::string& primary, const std::string& raw, const std::string& aux, int kernel,
                const std::string& out) {
  const Clip p = load_clip(primary);
  const Clip r = load_clip(raw);
  const Clip a = aux == "bgsub" ? background_subtract_clip(r) : median_filter_clip(r, kernel);
  save_composed(compose_channels(p, a), out);
  std::cout << "frames=" << p.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates and frees multi-megabyte tensors per batch; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"Self-supervised denoising for low-SNR video"};
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file with one [subcommand] section; flags override it");
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic clip with moving discs");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--seed", sa.cfg.seed);
  synth->add_option("--height", sa.cfg.height);
  synth->add_option("--width", sa.cfg.width);
  synth->add_option("--frames", sa.cfg.n_frames);
  synth->add_option("--objects", sa.cfg.n_objects);
  synth->add_option("--radius", sa.cfg.object_radius);
  synth->add_option("--speed", sa.cfg.object_speed, "Pixels per frame");
  synth->add_option("--contrast", sa.cfg.object_contrast, "Negative for dark objects");
  synth->add_option("--background-level", sa.cfg.background_level);
  synth->add_option("--background-amplitude", sa.cfg.background_amplitude);
  synth->add_option("--drift", sa.cfg.background_drift_speed, "Background drift, pixels per frame");
  synth->add_option("--noise", sa.noise)->check(CLI::IsMember({"gaussian", "speckle", "pink"}));
  synth->add_option("--sigma", sa.noise_level, "Noise std (amplitude for pink)");
  synth->add_option("--fps", sa.cfg.fps);

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train a denoiser on clip directories");
  trn->add_option("--data", ta.data, "Clip directories")->required();
  trn->add_option("--target", ta.target)->check(kTargetName);
  trn->add_option("--epochs", ta.epochs);
  trn->add_option("--batch-size", ta.batch_size);
  trn->add_option("--lr", ta.lr);
  trn->add_option("--seed", ta.seed);
  trn->add_option("--base-channels", ta.base_channels);
  trn->add_option("--max-channels", ta.max_channels);
  trn->add_option("--stages", ta.stages);
  trn->add_option("--stride", ta.stride, "Temporal stride of the input frames");
  trn->add_flag("--no-clamp-target", ta.no_clamp_target);
  trn->add_option("--out", ta.out, "Checkpoint path")->required();
  trn->add_option("--report", ta.report, "Defaults to train_report.csv next to the checkpoint");

  std::string dn_ckpt, dn_in, dn_out;
  auto* den = app.add_subcommand("denoise", "Denoise a clip with a checkpoint");
  den->add_option("--ckpt", dn_ckpt)->required();
  den->add_option("--in", dn_in)->required();
  den->add_option("--out", dn_out)->required();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Compute a metric report");
  ev->add_option("--mode", ea.mode)->required()->check(CLI::IsMember({"fbd", "psnr", "detect"}));
  ev->add_option("--in", ea.in)->required();
  ev->add_option("--clean", ea.clean);
  ev->add_option("--ann", ea.ann);
  ev->add_option("--out", ea.out)->required();
  ev->add_option("--bins", ea.bins);
  ev->add_option("--threshold", ea.threshold);
  ev->add_option("--min-area", ea.min_area);
  ev->add_option("--iou", ea.iou);

  GradcheckOptions go;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every autodiff op");
  gc->add_option("--seed", go.seed);
  gc->add_option("--corrupt", go.corrupt, "Test hook: perturb this op's analytic gradient")
      ->check(CLI::IsMember(gradcheck_op_names()))
      ->group("");

  std::string cp_raw, cp_den, cp_ann, cp_clean;
  auto* cmp = app.add_subcommand("compare", "FBD (and PSNR/SSIM) of raw vs denoised");
  cmp->add_option("--raw", cp_raw)->required();
  cmp->add_option("--denoised", cp_den)->required();
  cmp->add_option("--ann", cp_ann)->required();
  cmp->add_option("--clean", cp_clean);

  std::string tg_in, tg_name = "pfdwt1", tg_out;
  bool tg_no_clamp = false;
  auto* tgt = app.add_subcommand("target", "Write the reconstruction target frames of a clip");
  tgt->add_option("--in", tg_in)->required();
  tgt->add_option("--target", tg_name)->check(kTargetName);
  tgt->add_option("--out", tg_out)->required();
  tgt->add_flag("--no-clamp", tg_no_clamp);

  std::string co_primary, co_raw, co_aux = "bgsub", co_out;
  int co_kernel = 3;
  auto* cps = app.add_subcommand("compose", "Three-channel (primary, primary, aux) P6 clip");
  cps->add_option("--primary", co_primary, "Usually the denoised clip")->required();
  cps->add_option("--raw", co_raw, "Clip the aux channel is computed from")->required();
  cps->add_option("--aux", co_aux)->check(CLI::IsMember({"bgsub", "median"}));
  cps->add_option("--median-kernel", co_kernel);
  cps->add_option("--out", co_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return run_synth(sa);
    if (*trn) return run_train(ta);
    if (*den) return run_denoise(dn_ckpt, dn_in, dn_out);
    if (*ev) return run_eval(ea);
    if (*gc) return run_gradcheck_cmd(go);
    if (*cmp) return run_compare(cp_raw, cp_den, cp_ann, cp_clean);
    if (*tgt) return run_target(tg_in, tg_name, tg_out, tg_no_clamp);
    if (*cps) return run_compose(co_primary, co_raw, co_aux, co_kernel, co_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
