#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "saved/compose.hpp"
#include "saved/io.hpp"
#include "support.hpp"

using namespace saved;

namespace {

// Sorts the replicated k x k neighbourhood and takes the middle element.
double median_oracle(const Frame& f, Eigen::Index y, Eigen::Index x, int k) {
  std::vector<double> v;
  const int r = k / 2;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const Eigen::Index yy = std::clamp<Eigen::Index>(y + dy, 0, f.height() - 1);
      const Eigen::Index xx = std::clamp<Eigen::Index>(x + dx, 0, f.width() - 1);
      v.push_back(f(yy, xx));
    }
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(BackgroundSubtract, ConstantClipIsZero) {
  const Clip c(std::vector<Frame>(4, Frame(Image::Constant(5, 5, 0.7))));
  const Clip b = background_subtract_clip(c);
  for (std::size_t t = 0; t < b.size(); ++t) EXPECT_EQ(b[t].pixels().cwiseAbs().maxCoeff(), 0.0);
}

TEST(BackgroundSubtract, TwoFrameClosedForm) {
  Image a(1, 2), b(1, 2);
  a << 0.2, 0.9;
  b << 0.6, 0.1;
  const Clip out = background_subtract_clip(Clip({Frame(a), Frame(b)}));
  // mean = (0.4, 0.5): frame0 -> (0, 0.4), frame1 -> (0.2, 0).
  EXPECT_NEAR(out[0](0, 0), 0.0, 1e-15);
  EXPECT_NEAR(out[0](0, 1), 0.4, 1e-15);
  EXPECT_NEAR(out[1](0, 0), 0.2, 1e-15);
  EXPECT_NEAR(out[1](0, 1), 0.0, 1e-15);
}

TEST(Median, SaltRemovedAndOracle) {
  Image img = Image::Constant(5, 5, 0.3);
  img(2, 2) = 1.0;
  EXPECT_EQ(median_filter_frame(Frame(img))(2, 2), 0.3);

  CounterRng rng(1);
  const Frame f(test::random_image(9, 7, rng));
  for (int k : {3, 5}) {
    const Frame m = median_filter_frame(f, k);
    for (Eigen::Index y = 0; y < 9; ++y)
      for (Eigen::Index x = 0; x < 7; ++x) EXPECT_EQ(m(y, x), median_oracle(f, y, x, k));
  }
}

TEST(Median, IdempotentOnBinarySquare) {
  Image img = Image::Zero(10, 10);
  img.block(2, 2, 5, 5).setConstant(1.0);
  const Frame once = median_filter_frame(Frame(img));
  EXPECT_TRUE(median_filter_frame(once) == once);
  EXPECT_EQ(once(2, 2), 0.0);  // a corner sees only 4 of 9 set pixels
  EXPECT_EQ(once(2, 3), 1.0);
  EXPECT_EQ(once(4, 4), 1.0);
}

TEST(Median, InvalidKernel) {
  const Frame f(4, 4);
  EXPECT_THROW(median_filter_frame(f, 2), std::invalid_argument);
  EXPECT_THROW(median_filter_frame(f, 1), std::invalid_argument);
  EXPECT_EQ(median_filter_clip(Clip({f, f}), 3).size(), 2u);
}

TEST(Compose, ChannelOrderAndErrors) {
  const Clip p = test::random_clip(3, 4, 5, 1);
  const Clip a = test::random_clip(3, 4, 5, 2);
  const ComposedClip c = compose_channels(p, a);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_TRUE(c.frames[1][0] == p[1]);
  EXPECT_TRUE(c.frames[1][1] == p[1]);
  EXPECT_TRUE(c.frames[1][2] == a[1]);
  EXPECT_THROW(compose_channels(p, test::random_clip(2, 4, 5, 2)), std::invalid_argument);
  EXPECT_THROW(compose_channels(p, test::random_clip(3, 4, 4, 2)), std::invalid_argument);
}

TEST(Compose, PpmBytesAreInterleaved) {
  Image r(1, 2), b(1, 2);
  r << 1.0, 0.2;
  b << 0.0, 0.6;
  const ComposedClip c = compose_channels(Clip({Frame(r)}), Clip({Frame(b)}));
  const auto dir = test::temp_dir("ppm_bytes");
  save_composed(c, dir);
  std::ifstream in(dir / "frame_00000.ppm", std::ios::binary);
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), {}};
  const std::string header = "P6\n2 1\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_TRUE(std::equal(header.begin(), header.end(), bytes.begin()));
  const std::vector<unsigned char> px(bytes.begin() + static_cast<long>(header.size()), bytes.end());
  EXPECT_EQ(px, (std::vector<unsigned char>{255, 255, 0, 51, 51, 153}));
}

TEST(Compose, RoundTrip) {
  const ComposedClip c = compose_channels(test::random_clip(3, 6, 4, 5), test::random_clip(3, 6, 4, 6));
  const auto dir = test::temp_dir("composed_rt");
  save_composed(c, dir);
  const ComposedClip back = load_composed(dir);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.fps, c.fps);
  for (std::size_t t = 0; t < 3; ++t)
    for (int ch = 0; ch < 3; ++ch)
      for (Eigen::Index i = 0; i < 24; ++i)
        EXPECT_EQ(back.frames[t][ch].pixels().data()[i], quantize(c.frames[t][ch].pixels().data()[i]) / 255.0);
  const auto dir2 = test::temp_dir("composed_rt2");
  save_composed(back, dir2);
  const ComposedClip again = load_composed(dir2);
  for (std::size_t t = 0; t < 3; ++t)
    for (int ch = 0; ch < 3; ++ch) EXPECT_TRUE(again.frames[t][ch] == back.frames[t][ch]);
}
