#include "saved/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "saved/io.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace saved {

using ad::Shape;
using ad::Tensor;

std::vector<TrainSample> build_dataset(const std::vector<Clip>& clips, std::size_t stride) {
  std::vector<TrainSample> out;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    for (const FrameWindow& w : valid_windows(clips[c], stride)) out.push_back({c, w});
  }
  return out;
}

std::vector<TrainSample> build_dataset(const std::vector<Clip>& clips, std::size_t stride, const TargetKind& target) {
  const TemporalReach reach = temporal_reach(target);
  std::vector<TrainSample> out;
  for (const TrainSample& s : build_dataset(clips, stride)) {
    const std::size_t t = s.window.center;
    if (t >= reach.past && t + reach.future < clips[s.clip].size()) out.push_back(s);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  model.validate();
  saved::validate(target);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(derive_key(seed, static_cast<std::uint64_t>(epoch)), 0x5348554646ull);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

namespace {

// Flush-to-zero and denormals-are-zero while alive. Adam moments of rarely
// active units decay into subnormal range, which slows float math severalfold.
class DenormalGuard {
 public:
#if defined(__SSE__)
  DenormalGuard() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~DenormalGuard() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

struct PreparedSample {
  Image current;
  Image previous;
  Image previous2;
  Image target;
};

void copy_into(Tensor<float>& batch, Eigen::Index n, const Image& img) {
  float* dst = batch.value().data() + n * batch.shape().item();
  for (Eigen::Index i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(img.data()[i]);
}

}  // namespace

TrainResult train(const std::vector<Clip>& clips, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  config.validate();
  const DenormalGuard ftz;
  if (clips.empty()) throw std::invalid_argument("train: no clips given");
  for (const Clip& c : clips) {
    if (c.height() != clips.front().height() || c.width() != clips.front().width()) {
      throw std::invalid_argument("train: all clips must share frame dimensions");
    }
  }
  const Eigen::Index H = clips.front().height();
  const Eigen::Index W = clips.front().width();
  config.model.check_input(H, W);

  const std::vector<TrainSample> dataset = build_dataset(clips, config.model.stride, config.target);
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty (clips too short for the window)");

  std::vector<TargetBuilder> builders;
  builders.reserve(clips.size());
  for (const Clip& c : clips) builders.emplace_back(c, config.target, config.clamp_target);

  std::vector<PreparedSample> prepared;
  prepared.reserve(dataset.size());
  for (const TrainSample& s : dataset) {
    const Clip& c = clips[s.clip];
    prepared.push_back({c[s.window.center].pixels(), c[s.window.previous()].pixels(),
                        c[s.window.previous2()].pixels(), builders[s.clip](s.window.center)});
  }

  TrainResult result;
  result.checkpoint.seed = config.seed;
  result.checkpoint.params = init_model<float>(config.model, config.seed);
  ModelParams<float>& params = result.checkpoint.params;
  std::vector<Tensor<float>*> plist = params.parameters();
  ad::AdamState<float> adam = ad::AdamState<float>::zeros_like(plist);
  ad::AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;

  const std::size_t n = dataset.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = epoch_order(n, config.seed, epoch);
    CounterRng aug_rng(derive_key(config.seed, static_cast<std::uint64_t>(epoch)), 0x415547ull);
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += batch) {
      const std::size_t bn = std::min(batch, n - b0);
      const Shape shape{static_cast<Eigen::Index>(bn), 1, H, W};
      Tensor<float> cur(shape), prev(shape), prev2(shape), target(shape);
      for (std::size_t k = 0; k < bn; ++k) {
        const PreparedSample& s = prepared[order[b0 + k]];
        const auto idx = static_cast<Eigen::Index>(k);
        if (config.augment) {
          PreparedSample a = s;
          config.augment(a.current, a.previous, a.previous2, a.target, aug_rng);
          copy_into(cur, idx, a.current);
          copy_into(prev, idx, a.previous);
          copy_into(prev2, idx, a.previous2);
          copy_into(target, idx, a.target);
        } else {
          copy_into(cur, idx, s.current);
          copy_into(prev, idx, s.previous);
          copy_into(prev2, idx, s.previous2);
          copy_into(target, idx, s.target);
        }
      }
      ad::Tape<float> tape;
      params.zero_grad();
      Tensor<float>& pred = forward(tape, params, cur, prev, prev2);
      Tensor<float>& loss = ad::mse_loss(tape, pred, target);
      const double value = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch starting at sample " << b0;
        throw std::runtime_error(msg.str());
      }
      tape.backward(loss);
      ad::adam_step(plist, adam, adam_cfg);
      loss_sum += value * static_cast<double>(bn);
    }
    result.checkpoint.step = static_cast<std::uint64_t>(adam.step);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EpochStats stats{epoch, loss_sum / static_cast<double>(n), seconds};
    result.report.epochs.push_back(stats);
    if (!config.checkpoint_path.empty()) {
      save_checkpoint(result.checkpoint, config.checkpoint_path);
      result.report.checkpoint_path = config.checkpoint_path;
    }
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss,seconds\n";
  for (const EpochStats& e : report.epochs) {
    out << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.seconds) << '\n';
  }
}

Clip denoise_clip(ModelParams<float>& params, const Clip& clip) {
  params.config.check_input(clip.height(), clip.width());
  const DenormalGuard ftz;
  const std::size_t T = params.config.stride;
  std::vector<Frame> out;
  out.reserve(clip.size());
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const std::size_t p1 = t >= T ? t - T : 0;
    const std::size_t p2 = t >= 2 * T ? t - 2 * T : 0;
    out.push_back(Frame::clamped(predict(params, clip[t], clip[p1], clip[p2])));
  }
  return Clip(std::move(out), clip.fps(), clip.source_id());
}

Clip denoise_clip(const Checkpoint& checkpoint, const Clip& clip) {
  ModelParams<float> params = checkpoint.params;
  return denoise_clip(params, clip);
}

}  // namespace saved
