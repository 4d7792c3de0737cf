#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "saved/metrics.hpp"
#include "saved/synth.hpp"

using namespace saved;

namespace {

SynthConfig small(std::uint64_t seed = 0) {
  SynthConfig c;
  c.n_frames = 20;
  c.seed = seed;
  return c;
}

double sample_std(const Image& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

bool clips_equal(const Clip& a, const Clip& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t t = 0; t < a.size(); ++t)
    if (!(a[t] == b[t])) return false;
  return true;
}

}  // namespace

TEST(Synth, DefaultShape) {
  const SynthOutput o = generate(SynthConfig{});
  EXPECT_EQ(o.clean.size(), 200u);
  EXPECT_EQ(o.noisy.height(), 64);
  EXPECT_EQ(o.noisy.width(), 64);
  EXPECT_EQ(o.annotations.size(), 600u);
}

TEST(Synth, DeterministicPerSeed) {
  const SynthOutput a = generate(small(4));
  const SynthOutput b = generate(small(4));
  EXPECT_TRUE(clips_equal(a.clean, b.clean));
  EXPECT_TRUE(clips_equal(a.noisy, b.noisy));
  EXPECT_EQ(a.annotations, b.annotations);
  EXPECT_FALSE(clips_equal(a.noisy, generate(small(5)).noisy));
}

TEST(Synth, NoObjectsNoNoiseGivesIdenticalClips) {
  SynthConfig c = small();
  c.n_objects = 0;
  c.noise = GaussianNoise{0.0};
  const SynthOutput o = generate(c);
  EXPECT_TRUE(clips_equal(o.clean, o.noisy));
  EXPECT_TRUE(o.annotations.empty());
}

TEST(Synth, GaussianSigmaPointOneGivesTwentyDb) {
  SynthConfig c = small();
  c.object_contrast = 0.4;
  c.background_level = 0.3;  // keeps clamping out of the measurement
  c.noise = GaussianNoise{0.1};
  const SynthOutput o = generate(c);
  const QualityReport q = quality(o.clean, o.noisy);
  EXPECT_NEAR(q.clip_psnr, 20.0, 0.5);
}

TEST(Synth, CleanDoesNotDependOnNoise) {
  SynthConfig a = small(2), b = small(2);
  b.noise = PinkNoise{0.2};
  const SynthOutput oa = generate(a), ob = generate(b);
  EXPECT_TRUE(clips_equal(oa.clean, ob.clean));
  EXPECT_EQ(oa.annotations, ob.annotations);
  EXPECT_FALSE(clips_equal(oa.noisy, ob.noisy));
}

TEST(Synth, BackgroundDriftsAndStaysBounded) {
  SynthConfig c = small();
  c.n_objects = 0;
  const SynthOutput o = generate(c);
  EXPECT_FALSE(o.clean[0] == o.clean[19]);
  for (std::size_t t = 0; t < o.clean.size(); ++t) {
    EXPECT_NEAR(o.clean[t].pixels().mean(), c.background_level, c.background_amplitude);
    EXPECT_LE((o.clean[t].pixels().array() - c.background_level).abs().maxCoeff(), c.background_amplitude + 1e-12);
  }
}

TEST(Synth, OneBoxPerObjectPerFrame) {
  const SynthConfig c = small(1);
  const SynthOutput o = generate(c);
  ASSERT_EQ(o.annotations.size(), static_cast<std::size_t>(c.n_frames * c.n_objects));
  std::set<std::pair<int, int>> seen;
  for (const BoxAnnotation& b : o.annotations) {
    EXPECT_TRUE(seen.insert({b.frame_index, b.object_id}).second);
    EXPECT_TRUE(b.fits(c.height, c.width));
    EXPECT_LE(b.w, 2 * static_cast<int>(c.object_radius) + 2);
  }
}

TEST(Synth, BoxesCoverObjectPixels) {
  SynthConfig with = small(3), without = small(3);
  without.n_objects = 0;
  const SynthOutput a = generate(with), b = generate(without);
  for (std::size_t t = 0; t < a.clean.size(); ++t) {
    const Image contribution = a.clean[t].pixels() - b.clean[t].pixels();
    for (Eigen::Index y = 0; y < contribution.rows(); ++y)
      for (Eigen::Index x = 0; x < contribution.cols(); ++x) {
        if (contribution(y, x) <= 0.5 * with.object_contrast) continue;
        bool covered = false;
        for (const BoxAnnotation& box : a.annotations)
          covered |= box.frame_index == static_cast<int>(t) && x >= box.x && x < box.right() && y >= box.y && y < box.bottom();
        EXPECT_TRUE(covered) << t << ' ' << y << ' ' << x;
      }
  }
}

TEST(Synth, ObjectsMoveBetweenFrames) {
  const SynthOutput o = generate(small(6));
  const BoxAnnotation& first = o.annotations.front();
  int moved = 0;
  for (const BoxAnnotation& b : o.annotations)
    if (b.object_id == first.object_id && (b.x != first.x || b.y != first.y)) ++moved;
  EXPECT_GT(moved, 10);
}

TEST(Synth, DarkObjectsWithNegativeContrast) {
  SynthConfig c = small(2);
  c.background_level = 0.85;
  c.object_contrast = -0.35;
  c.noise = GaussianNoise{0.0};
  const SynthOutput o = generate(c);
  const BoxAnnotation& b = o.annotations.front();
  const double centre = o.clean[0](b.y + b.h / 2, b.x + b.w / 2);
  EXPECT_LT(centre, 0.6);
}

TEST(SynthConfig, Validation) {
  SynthConfig c;
  c.object_contrast = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SynthConfig{};
  c.object_radius = 40;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SynthConfig{};
  c.n_frames = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SynthConfig{};
  c.noise = GaussianNoise{-0.1};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Noise, GaussianStd) {
  CounterRng rng(1);
  const Frame f(Image::Constant(64, 64, 0.5));
  const Frame n = add_gaussian(f, 0.1, rng);
  EXPECT_NEAR(sample_std(n.pixels()), 0.1, 0.005);
  EXPECT_NEAR(n.pixels().mean(), 0.5, 0.01);
}

TEST(Noise, SpeckleScalesWithIntensity) {
  const Frame lo(Image::Constant(32, 32, 0.2));
  const Frame hi(Image::Constant(32, 32, 0.4));
  CounterRng r1(9), r2(9);
  const Image dl = add_speckle(lo, 0.1, r1).pixels().array() - 0.2;
  const Image dh = add_speckle(hi, 0.1, r2).pixels().array() - 0.4;
  EXPECT_LE((dh - 2 * dl).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(sample_std(dl), 0.02, 0.002);
  CounterRng r3(9);
  EXPECT_EQ(add_speckle(Frame(8, 8), 0.5, r3).pixels().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Noise, PinkFieldStatistics) {
  CounterRng rng(2);
  const Image p = pink_field(64, 64, rng);
  EXPECT_NEAR(p.mean(), 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(p.array().square().mean()), 1.0, 1e-9);

  CounterRng rng2(3);
  const Frame n = add_pink(Frame(Image::Constant(64, 64, 0.5)), 0.1, rng2);
  EXPECT_NEAR(sample_std(n.pixels()), 0.1, 0.01);
}

TEST(Noise, PinkPowerConcentratesAtLowFrequencies) {
  // White noise: 2x2 block means keep 1/4 of the variance and neighbours are
  // uncorrelated. A falling spectrum keeps far more and correlates neighbours.
  double block_ratio = 0, neighbour_corr = 0;
  const int reps = 5;
  for (int k = 0; k < reps; ++k) {
    CounterRng rng(40 + k);
    const Image p = pink_field(64, 64, rng);
    Image blocks(32, 32);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) blocks(y, x) = p.block(2 * y, 2 * x, 2, 2).mean();
    block_ratio += (blocks.array() - blocks.mean()).square().mean() / (p.array() - p.mean()).square().mean();
    const Image left = p.leftCols(63), right = p.rightCols(63);
    neighbour_corr += ((left.array() - left.mean()) * (right.array() - right.mean())).mean() /
                      std::sqrt((left.array() - left.mean()).square().mean() * (right.array() - right.mean()).square().mean());
  }
  EXPECT_GT(block_ratio / reps, 0.5);
  EXPECT_GT(neighbour_corr / reps, 0.3);
}

TEST(Noise, ApplyNoiseDispatches) {
  const Frame f(Image::Constant(16, 16, 0.5));
  CounterRng a(1), b(1);
  EXPECT_TRUE(apply_noise(f, GaussianNoise{0.1}, a) == add_gaussian(f, 0.1, b));
  CounterRng c(1), d(1);
  EXPECT_TRUE(apply_noise(f, SpeckleNoise{0.1}, c) == add_speckle(f, 0.1, d));
  CounterRng e(1), g(1);
  EXPECT_TRUE(apply_noise(f, PinkNoise{0.1}, e) == add_pink(f, 0.1, g));
}
