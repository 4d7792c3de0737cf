#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "saved/io.hpp"
#include "saved/types.hpp"
#include "support.hpp"

using namespace saved;
namespace fs = std::filesystem;

namespace {

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_raw_pgm(const fs::path& p, int w, int h, int maxval, const std::vector<unsigned char>& px) {
  std::ofstream out(p, std::ios::binary);
  out << "P5\n" << w << ' ' << h << '\n' << maxval << '\n';
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

}  // namespace

TEST(Frame, RejectsOutOfRangeAndEmpty) {
  Image bad(1, 2);
  bad << 0.5, 1.2;
  EXPECT_THROW(Frame{bad}, std::invalid_argument);
  EXPECT_THROW(Frame(Image(0, 3)), std::invalid_argument);
  Image nan(1, 1);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(Frame{nan}, std::invalid_argument);
}

TEST(Frame, ClampedMapsIntoUnitRange) {
  Image img(1, 3);
  img << -0.5, 0.25, 3.0;
  const Frame f = Frame::clamped(img);
  EXPECT_EQ(f(0, 0), 0.0);
  EXPECT_EQ(f(0, 1), 0.25);
  EXPECT_EQ(f(0, 2), 1.0);
}

TEST(Clip, RequiresFramesOfEqualSize) {
  EXPECT_THROW(Clip({}), std::invalid_argument);
  EXPECT_THROW(Clip({Frame(2, 2), Frame(2, 3)}), std::invalid_argument);
  const Clip c({Frame(4, 5), Frame(4, 5)}, 25.0, "x");
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.height(), 4);
  EXPECT_EQ(c.width(), 5);
  EXPECT_EQ(c.fps(), 25.0);
}

TEST(ValidWindows, BoundaryArithmetic) {
  auto centres = [](std::size_t len, std::size_t T) {
    std::vector<std::size_t> out;
    for (const FrameWindow& w : valid_windows(len, T)) out.push_back(w.center);
    return out;
  };
  EXPECT_EQ(centres(10, 1), (std::vector<std::size_t>{2, 3, 4, 5, 6, 7, 8}));
  EXPECT_TRUE(centres(4, 2).empty());
  EXPECT_EQ(centres(5, 1), (std::vector<std::size_t>{2, 3}));
  EXPECT_THROW(valid_windows(5, 0), std::invalid_argument);
}

TEST(ValidWindows, CountAndInvariantProperty) {
  for (std::size_t len = 1; len <= 30; ++len) {
    for (std::size_t T = 1; T <= 5; ++T) {
      const auto ws = valid_windows(len, T);
      EXPECT_EQ(ws.size(), len >= 3 * T ? len - 3 * T : 0u) << len << ' ' << T;
      for (const FrameWindow& w : ws) {
        EXPECT_GE(w.center, 2 * T);
        EXPECT_LE(w.future(), len - 1);
        EXPECT_EQ(w.previous2(), w.center - 2 * T);
      }
    }
  }
}

TEST(Quantize, RoundHalfAwayAndClamp) {
  EXPECT_EQ(quantize(0.5), 128);  // 127.5 rounds up
  EXPECT_EQ(quantize(1.3), 255);
  EXPECT_EQ(quantize(-0.1), 0);
  EXPECT_EQ(quantize(1.0), 255);
  EXPECT_EQ(quantize(0.0), 0);
  for (int b = 0; b < 256; ++b) EXPECT_EQ(quantize(b / 255.0), b);
}

TEST(ClipIo, LoadsThreeFramesAndMapsBytes) {
  const fs::path dir = test::temp_dir("load3");
  std::vector<unsigned char> px(64 * 64, 0);
  px[0] = 255;
  px[1] = 51;
  for (int i = 0; i < 3; ++i) write_raw_pgm(dir / ("f" + std::to_string(i) + ".pgm"), 64, 64, 255, px);
  std::ofstream(dir / "manifest.txt") << "fps=12.5\nf0.pgm\nf1.pgm\nf2.pgm\n";
  const Clip c = load_clip(dir);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.height(), 64);
  EXPECT_EQ(c.width(), 64);
  EXPECT_EQ(c.fps(), 12.5);
  EXPECT_EQ(c[0](0, 0), 1.0);
  EXPECT_EQ(c[0](0, 1), 0.2);
  EXPECT_EQ(c[0](0, 2), 0.0);
}

TEST(ClipIo, ManifestOrderWins) {
  const fs::path dir = test::temp_dir("order");
  write_raw_pgm(dir / "f1.pgm", 2, 1, 255, {10, 10});
  write_raw_pgm(dir / "f2.pgm", 2, 1, 255, {20, 20});
  std::ofstream(dir / "manifest.txt") << "fps=10\nf2.pgm\nf1.pgm\n";
  const Clip c = load_clip(dir);
  EXPECT_EQ(c[0](0, 0), 20 / 255.0);
  EXPECT_EQ(c[1](0, 0), 10 / 255.0);
}

TEST(ClipIo, Errors) {
  const fs::path dir = test::temp_dir("errors");
  EXPECT_THROW(load_clip(dir), FormatError);  // no manifest

  std::ofstream(dir / "manifest.txt") << "fps=10\nmissing.pgm\n";
  EXPECT_THROW(load_clip(dir), FormatError);

  write_raw_pgm(dir / "a.pgm", 2, 2, 255, {1, 2, 3, 4});
  write_raw_pgm(dir / "b.pgm", 3, 2, 255, {1, 2, 3, 4, 5, 6});
  std::ofstream(dir / "manifest.txt") << "fps=10\na.pgm\nb.pgm\n";
  EXPECT_THROW(load_clip(dir), FormatError);

  {
    std::ofstream out(dir / "deep.pgm", std::ios::binary);
    out << "P5\n1 1\n65535\n";
    out.put(0).put(1);
  }
  std::ofstream(dir / "manifest.txt") << "fps=10\ndeep.pgm\n";
  try {
    load_clip(dir);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bit depth"), std::string::npos);
  }
}

TEST(ClipIo, RoundTripIsByteExact) {
  const Clip c = test::random_clip(4, 7, 9, 3);
  const fs::path a = test::temp_dir("rt_a");
  const fs::path b = test::temp_dir("rt_b");
  save_clip(c, a);
  const Clip loaded = load_clip(a);
  save_clip(loaded, b);
  for (std::size_t t = 0; t < c.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.pgm", t);
    EXPECT_EQ(slurp(a / name), slurp(b / name));
    for (Eigen::Index i = 0; i < c[t].pixels().size(); ++i) {
      EXPECT_EQ(loaded[t].pixels().data()[i], quantize(c[t].pixels().data()[i]) / 255.0);
    }
  }
  EXPECT_EQ(slurp(a / "manifest.txt"), slurp(b / "manifest.txt"));
}

TEST(ClipIo, GridValuedClipIsIdentityUnderRoundTrip) {
  CounterRng rng(5);
  std::vector<Frame> frames;
  for (int t = 0; t < 3; ++t) {
    Image img(5, 6);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<double>(rng.below(256)) / 255.0;
    frames.emplace_back(img);
  }
  const Clip c(frames, 7.0);
  const fs::path dir = test::temp_dir("grid");
  save_clip(c, dir);
  const Clip back = load_clip(dir);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t t = 0; t < c.size(); ++t) EXPECT_TRUE(back[t] == c[t]);
  EXPECT_EQ(back.fps(), 7.0);
}

TEST(Annotations, ParsesFormat) {
  const auto boxes = parse_annotations("0,1,10,12,5,6\n\n3,2,0,0,1,1\n");
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0], (BoxAnnotation{0, 1, 10, 12, 5, 6}));
  EXPECT_EQ(boxes[1], (BoxAnnotation{3, 2, 0, 0, 1, 1}));
  EXPECT_TRUE(parse_annotations("").empty());
}

TEST(Annotations, EmptyFileGivesEmptyList) {
  const fs::path dir = test::temp_dir("ann_empty");
  std::ofstream(dir / "a.csv").close();
  EXPECT_TRUE(load_annotations(dir / "a.csv").empty());
}

TEST(Annotations, NegativeExtentNamesLine) {
  try {
    parse_annotations("0,1,10,12,-5,6\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  try {
    parse_annotations("0,1,1,1,1,1\n0,1,x,1,1,1\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Annotations, SaveLoadRoundTrip) {
  const std::vector<BoxAnnotation> boxes{{0, 1, 2, 3, 4, 5}, {7, 0, 0, 0, 9, 9}};
  const fs::path dir = test::temp_dir("ann_rt");
  save_annotations(boxes, dir / "a.csv");
  EXPECT_EQ(load_annotations(dir / "a.csv"), boxes);
}

TEST(Annotations, ValidationAgainstClip) {
  const Clip c({Frame(10, 10), Frame(10, 10)});
  EXPECT_NO_THROW(validate_annotations({{1, 0, 0, 0, 10, 10}}, c));
  EXPECT_THROW(validate_annotations({{2, 0, 0, 0, 1, 1}}, c), std::invalid_argument);
  EXPECT_THROW(validate_annotations({{0, 0, 5, 5, 6, 1}}, c), std::invalid_argument);
}
