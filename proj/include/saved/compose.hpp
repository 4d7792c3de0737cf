#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "saved/types.hpp"

namespace saved {

/// Per-frame clamp(I_t - mean_frame, 0, 1).
Clip background_subtract_clip(const Clip& clip);

/// k x k spatial median with edge replication. k must be odd and >= 3.
Frame median_filter_frame(const Frame& frame, int k = 3);
Clip median_filter_clip(const Clip& clip, int k = 3);

/// Three channels per frame, stored in (r, g, b) order.
struct ComposedClip {
  std::vector<std::array<Frame, 3>> frames;
  double fps = 10.0;

  std::size_t size() const { return frames.size(); }
};

/// Channels (primary, primary, aux). Throws std::invalid_argument when the
/// clips differ in length or frame size.
ComposedClip compose_channels(const Clip& primary, const Clip& aux);

/// `frame_00000.ppm`, ... plus `manifest.txt`.
void save_composed(const ComposedClip& clip, const std::filesystem::path& directory);
ComposedClip load_composed(const std::filesystem::path& directory);

}  // namespace saved
