#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "saved/rng.hpp"
#include "saved/types.hpp"

namespace saved {

struct GaussianNoise {
  double sigma = 0.1;
};
struct SpeckleNoise {
  double sigma = 0.1;
};
struct PinkNoise {
  double amplitude = 0.1;
};
using NoiseModel = std::variant<GaussianNoise, SpeckleNoise, PinkNoise>;

/// Moving bright (or, with negative contrast, dark) discs over a drifting
/// smooth background. Speeds are in pixels per frame.
struct SynthConfig {
  int height = 64;
  int width = 64;
  int n_frames = 200;
  int n_objects = 3;
  double object_radius = 8.0;  // (2r+1)^2 >= 256: a box holds at least one pixel per FBD bin
  double object_speed = 1.0;
  double object_contrast = 0.35;
  double background_level = 0.15;  // clean disc peak sits at the 0.5 detection threshold
  double background_amplitude = 0.05;
  double background_drift_speed = 0.25;
  NoiseModel noise = GaussianNoise{0.15};
  std::uint64_t seed = 0;
  double fps = 10.0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct SynthOutput {
  Clip clean;
  Clip noisy;
  std::vector<BoxAnnotation> annotations;
};

SynthOutput generate(const SynthConfig& config);

/// clamp(v + n), n ~ N(0, sigma^2) per pixel.
Frame add_gaussian(const Frame& frame, double sigma, CounterRng& rng);
/// clamp(v * (1 + n)), n ~ N(0, sigma^2) per pixel.
Frame add_speckle(const Frame& frame, double sigma, CounterRng& rng);
/// clamp(v + P) with P a zero-mean 1/f-shaped field of standard deviation `amplitude`.
Frame add_pink(const Frame& frame, double amplitude, CounterRng& rng);
/// Zero-mean field whose Fourier amplitude falls as 1/max(f, 1) with f the
/// radial frequency in cycles per frame width; scaled to unit standard deviation.
Image pink_field(Eigen::Index height, Eigen::Index width, CounterRng& rng);

Frame apply_noise(const Frame& frame, const NoiseModel& noise, CounterRng& rng);

}  // namespace saved
