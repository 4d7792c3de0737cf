#include "saved/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace saved {

namespace {

constexpr std::uint64_t kBackgroundStream = 1;
constexpr std::uint64_t kObjectStream = 2;
constexpr std::uint64_t kNoiseTag = 0x4E4F495345ull;

struct Wave {
  double fx;  // cycles per frame width
  double fy;  // cycles per frame height
  double phase;
  double amplitude;
};

struct Mover {
  double x, y, vx, vy;
};

void reflect(double& p, double& v, double lo, double hi) {
  if (hi <= lo) {
    p = lo;
    return;
  }
  for (int guard = 0; guard < 8 && (p < lo || p > hi); ++guard) {
    if (p < lo) {
      p = 2 * lo - p;
      v = -v;
    } else if (p > hi) {
      p = 2 * hi - p;
      v = -v;
    }
  }
  p = std::clamp(p, lo, hi);
}

// Anti-aliased disc profile in [0,1]; zero once the pixel centre is r+0.5 away.
double disc_weight(double dist, double radius) { return std::clamp(radius + 0.5 - dist, 0.0, 1.0); }

}  // namespace

void SynthConfig::validate() const {
  if (height < 1 || width < 1) throw std::invalid_argument("synth: frame size must be positive");
  if (n_frames < 4) throw std::invalid_argument("synth: n_frames must be >= 4");
  if (n_objects < 0) throw std::invalid_argument("synth: n_objects must be >= 0");
  if (!(object_radius >= 0.5)) throw std::invalid_argument("synth: object_radius must be >= 0.5");
  if (2 * (object_radius + 1) >= std::min(height, width)) throw std::invalid_argument("synth: objects do not fit");
  if (!(std::abs(object_contrast) > 0.0 && std::abs(object_contrast) <= 1.0)) {
    throw std::invalid_argument("synth: |object_contrast| must be in (0,1]");
  }
  if (object_speed < 0 || background_drift_speed < 0) throw std::invalid_argument("synth: speeds must be >= 0");
  if (background_amplitude < 0) throw std::invalid_argument("synth: background_amplitude must be >= 0");
  std::visit([](const auto& n) {
    using T = std::decay_t<decltype(n)>;
    if constexpr (std::is_same_v<T, PinkNoise>) {
      if (n.amplitude < 0) throw std::invalid_argument("synth: pink amplitude must be >= 0");
    } else {
      if (n.sigma < 0) throw std::invalid_argument("synth: noise sigma must be >= 0");
    }
  }, noise);
}

Frame add_gaussian(const Frame& frame, double sigma, CounterRng& rng) {
  if (sigma == 0.0) return frame;
  Image out = frame.pixels();
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] += rng.normal(0.0, sigma);
  return Frame::clamped(out);
}

Frame add_speckle(const Frame& frame, double sigma, CounterRng& rng) {
  if (sigma == 0.0) return frame;
  Image out = frame.pixels();
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] *= 1.0 + rng.normal(0.0, sigma);
  return Frame::clamped(out);
}

Image pink_field(Eigen::Index height, Eigen::Index width, CounterRng& rng) {
  using Complex = std::complex<double>;
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> spectrum(height, width);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) spectrum.data()[i] = Complex(rng.normal(), 0.0);

  Eigen::FFT<double> fft;
  std::vector<Complex> line_in, line_out;
  auto transform = [&](bool inverse) {
    for (Eigen::Index y = 0; y < height; ++y) {
      line_in.assign(spectrum.row(y).data(), spectrum.row(y).data() + width);
      inverse ? fft.inv(line_out, line_in) : fft.fwd(line_out, line_in);
      for (Eigen::Index x = 0; x < width; ++x) spectrum(y, x) = line_out[static_cast<std::size_t>(x)];
    }
    for (Eigen::Index x = 0; x < width; ++x) {
      line_in.resize(static_cast<std::size_t>(height));
      for (Eigen::Index y = 0; y < height; ++y) line_in[static_cast<std::size_t>(y)] = spectrum(y, x);
      inverse ? fft.inv(line_out, line_in) : fft.fwd(line_out, line_in);
      for (Eigen::Index y = 0; y < height; ++y) spectrum(y, x) = line_out[static_cast<std::size_t>(y)];
    }
  };

  transform(false);
  for (Eigen::Index y = 0; y < height; ++y) {
    const double ky = static_cast<double>(y <= height / 2 ? y : y - height);
    const double fy = ky * static_cast<double>(width) / static_cast<double>(height);
    for (Eigen::Index x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x <= width / 2 ? x : x - width);
      const double f = std::hypot(fx, fy);
      spectrum(y, x) *= (y == 0 && x == 0) ? 0.0 : 1.0 / std::max(f, 1.0);
    }
  }
  transform(true);

  Image field(height, width);
  for (Eigen::Index i = 0; i < field.size(); ++i) field.data()[i] = spectrum.data()[i].real();
  field.array() -= field.mean();
  const double sd = std::sqrt(field.squaredNorm() / static_cast<double>(field.size()));
  if (sd > 0) field /= sd;
  return field;
}

Frame add_pink(const Frame& frame, double amplitude, CounterRng& rng) {
  if (amplitude == 0.0) return frame;
  return Frame::clamped(frame.pixels() + amplitude * pink_field(frame.height(), frame.width(), rng));
}

Frame apply_noise(const Frame& frame, const NoiseModel& noise, CounterRng& rng) {
  return std::visit(
      [&](const auto& n) -> Frame {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianNoise>) {
          return add_gaussian(frame, n.sigma, rng);
        } else if constexpr (std::is_same_v<T, SpeckleNoise>) {
          return add_speckle(frame, n.sigma, rng);
        } else {
          return add_pink(frame, n.amplitude, rng);
        }
      },
      noise);
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  const int H = config.height;
  const int W = config.width;

  CounterRng bg_rng(config.seed, kBackgroundStream);
  std::vector<Wave> waves(4);
  double amp_total = 0.0;
  for (Wave& w : waves) {
    w.fx = 1.0 + 2.0 * bg_rng.uniform();
    w.fy = (bg_rng.uniform() < 0.5 ? -1.0 : 1.0) * (1.0 + 2.0 * bg_rng.uniform());
    w.phase = 2.0 * std::numbers::pi * bg_rng.uniform();
    w.amplitude = 0.5 + bg_rng.uniform();
    amp_total += w.amplitude;
  }
  for (Wave& w : waves) w.amplitude *= config.background_amplitude / amp_total;
  const double drift_angle = 2.0 * std::numbers::pi * bg_rng.uniform();
  const double drift_x = config.background_drift_speed * std::cos(drift_angle);
  const double drift_y = config.background_drift_speed * std::sin(drift_angle);

  CounterRng obj_rng(config.seed, kObjectStream);
  const double r = config.object_radius;
  const double lo = r + 0.5;
  const double hi_x = W - 1 - r - 0.5;
  const double hi_y = H - 1 - r - 0.5;
  std::vector<Mover> movers(static_cast<std::size_t>(config.n_objects));
  for (Mover& m : movers) {
    m.x = lo + (hi_x - lo) * obj_rng.uniform();
    m.y = lo + (hi_y - lo) * obj_rng.uniform();
    const double a = 2.0 * std::numbers::pi * obj_rng.uniform();
    m.vx = config.object_speed * std::cos(a);
    m.vy = config.object_speed * std::sin(a);
  }

  std::vector<Frame> clean, noisy;
  std::vector<BoxAnnotation> boxes;
  const std::uint64_t noise_key = derive_key(config.seed, kNoiseTag);
  for (int t = 0; t < config.n_frames; ++t) {
    Image img(H, W);
    const double ox = drift_x * t;
    const double oy = drift_y * t;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double v = config.background_level;
        for (const Wave& w : waves) {
          v += w.amplitude *
               std::sin(2.0 * std::numbers::pi * (w.fx * (x - ox) / W + w.fy * (y - oy) / H) + w.phase);
        }
        img(y, x) = v;
      }
    }
    for (std::size_t k = 0; k < movers.size(); ++k) {
      const Mover& m = movers[k];
      int x0 = W, y0 = H, x1 = -1, y1 = -1;
      const int ylo = std::max(0, static_cast<int>(std::floor(m.y - r - 1)));
      const int yhi = std::min(H - 1, static_cast<int>(std::ceil(m.y + r + 1)));
      const int xlo = std::max(0, static_cast<int>(std::floor(m.x - r - 1)));
      const int xhi = std::min(W - 1, static_cast<int>(std::ceil(m.x + r + 1)));
      for (int y = ylo; y <= yhi; ++y) {
        for (int x = xlo; x <= xhi; ++x) {
          const double wgt = disc_weight(std::hypot(x - m.x, y - m.y), r);
          if (wgt <= 0.0) continue;
          img(y, x) += config.object_contrast * wgt;
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
        }
      }
      if (x1 >= x0) boxes.push_back({t, static_cast<int>(k), x0, y0, x1 - x0 + 1, y1 - y0 + 1});
    }
    clean.push_back(Frame::clamped(img));
    CounterRng noise_rng(noise_key, static_cast<std::uint64_t>(t));
    noisy.push_back(apply_noise(clean.back(), config.noise, noise_rng));

    for (Mover& m : movers) {
      m.x += m.vx;
      m.y += m.vy;
      reflect(m.x, m.vx, lo, hi_x);
      reflect(m.y, m.vy, lo, hi_y);
    }
  }
  return {Clip(std::move(clean), config.fps, "synth-clean"), Clip(std::move(noisy), config.fps, "synth-noisy"),
          std::move(boxes)};
}

}  // namespace saved
