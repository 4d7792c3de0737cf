#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "saved/checkpoint.hpp"
#include "saved/model.hpp"
#include "saved/rng.hpp"
#include "saved/targets.hpp"

namespace saved {

/// One training example: a frame window inside clip `clip`.
struct TrainSample {
  std::size_t clip = 0;
  FrameWindow window;
  friend bool operator==(const TrainSample&, const TrainSample&) = default;
};

/// valid_windows of every clip, in clip order then ascending t.
std::vector<TrainSample> build_dataset(const std::vector<Clip>& clips, std::size_t stride);
/// As above, minus windows whose target needs frames outside the clip.
std::vector<TrainSample> build_dataset(const std::vector<Clip>& clips, std::size_t stride, const TargetKind& target);

/// Per-sample hook applied to (current, previous, previous2, target) before
/// batching. Training ships without augmentation; this exists for experiments.
using Augmentation = std::function<void(Image&, Image&, Image&, Image&, CounterRng&)>;

/// Defaults: Adam at 1e-3 with no schedule, batch 4, PFDwT1 target.
struct TrainConfig {
  TargetKind target = PositiveFrameDiff{1, false};
  bool clamp_target = true;
  int epochs = 20;
  int batch_size = 4;
  double learning_rate = 1e-3;  // 0 freezes the parameters
  std::uint64_t seed = 0;
  ModelConfig model;
  std::filesystem::path checkpoint_path;  // rewritten after every epoch when set
  Augmentation augment;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;  // mean per-sample MSE over the epoch
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::filesystem::path checkpoint_path;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainReport report;
};

/// Self-supervised training on motion-augmented targets. Throws
/// std::invalid_argument for an empty dataset and std::runtime_error if the
/// loss becomes non-finite. `on_epoch` is called after each epoch.
TrainResult train(const std::vector<Clip>& clips, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Seeded Fisher-Yates permutation of 0..n-1 for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

/// `epoch,loss,seconds` header followed by one row per epoch.
void write_train_report(const TrainReport& report, const std::filesystem::path& path);

/// One output frame per input frame. Missing past frames near the start are
/// replaced by frame max(0, t-k) (edge replication).
Clip denoise_clip(ModelParams<float>& params, const Clip& clip);
Clip denoise_clip(const Checkpoint& checkpoint, const Clip& clip);

}  // namespace saved
