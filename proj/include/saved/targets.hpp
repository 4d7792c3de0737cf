#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "saved/types.hpp"

namespace saved {

/// Current frame plus the positive motion towards the previous and next
/// frames. `inverted` swaps max for min, emphasising dark movers.
struct PositiveFrameDiff {
  std::size_t stride = 1;
  bool inverted = false;
};
struct RawTarget {};
struct AbsDiffTarget {
  std::size_t stride = 1;
};
struct BackgroundSubTarget {};
/// Population standard deviation over the 2N+1 frames centred on t.
struct SigmaTarget {
  std::size_t radius = 1;
};
/// Sum of the N frames centred on t minus N times the clip mean, floored at 0.
struct SumMinusMeanTarget {
  std::size_t window = 3;
};

using TargetKind =
    std::variant<PositiveFrameDiff, RawTarget, AbsDiffTarget, BackgroundSubTarget, SigmaTarget, SumMinusMeanTarget>;

/// CLI names: pfdwt1 pfdwt2 inv-pfdwt1 raw absdiff bgsub sigma sum-mean.
/// Parameterised forms (pfdwt3, sigma1, sum-mean5, ...) are accepted too, and
/// are what target_kind_name returns.
TargetKind parse_target_kind(const std::string& name);
std::string target_kind_name(const TargetKind& kind);
const std::vector<std::string>& target_kind_names();
/// Throws std::invalid_argument when parameters break the kind's invariants.
void validate(const TargetKind& kind);

/// Frames t-k and t+k needed around the centre; for checking dataset windows.
struct TemporalReach {
  std::size_t past = 0;
  std::size_t future = 0;
};
TemporalReach temporal_reach(const TargetKind& kind);

/// Pixelwise temporal mean, accumulated in frame order.
Image mean_frame(const Clip& clip);

/// Unclamped positive-frame-difference sum; inputs are I_{t-T}, I_t, I_{t+T}.
Image pfd_sum(const Image& previous, const Image& current, const Image& future, bool inverted);

/// Clamped to [0,1].
Frame pfd_target(const Clip& clip, const FrameWindow& window, bool inverted = false);
Frame abs_diff_target(const Clip& clip, std::size_t t, std::size_t stride);
Frame background_sub_target(const Clip& clip, std::size_t t);
Frame background_sub_target(const Clip& clip, std::size_t t, const Image& mean);
Frame sigma_target(const Clip& clip, std::size_t t, std::size_t radius);
Frame sum_minus_mean_target(const Clip& clip, std::size_t t, std::size_t window);
Frame sum_minus_mean_target(const Clip& clip, std::size_t t, std::size_t window, const Image& mean);

/// Computes targets for one clip, caching the clip mean across calls.
class TargetBuilder {
 public:
  TargetBuilder(const Clip& clip, TargetKind kind, bool clamp_target = true);

  /// Throws std::out_of_range when the kind needs frames outside the clip.
  /// Values lie in [0,1] when clamping is on; otherwise they may exceed 1.
  Image operator()(std::size_t t) const;
  const TargetKind& kind() const { return kind_; }

 private:
  const Clip& clip_;
  TargetKind kind_;
  bool clamp_;
  Image mean_;
};

/// Clamped target for one frame; Raw returns I_t unchanged.
Frame compute_target(const Clip& clip, std::size_t t, const TargetKind& kind);

}  // namespace saved
