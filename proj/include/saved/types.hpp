#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace saved {

/// Row-major intensity grid. Used for intermediate (possibly out-of-range)
/// image arithmetic; a `Frame` is an `Image` that is known to lie in [0,1].
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Grayscale frame with intensities in [0,1].
class Frame {
 public:
  /// Throws std::invalid_argument if empty or any value is outside [0,1] or NaN.
  explicit Frame(Image pixels);
  Frame(Eigen::Index height, Eigen::Index width, double fill = 0.0);

  /// Clamps every value into [0,1]. NaN maps to 0.
  static Frame clamped(const Image& pixels);

  Eigen::Index height() const { return pixels_.rows(); }
  Eigen::Index width() const { return pixels_.cols(); }
  const Image& pixels() const { return pixels_; }
  double operator()(Eigen::Index y, Eigen::Index x) const { return pixels_(y, x); }

  bool same_size(const Frame& other) const {
    return height() == other.height() && width() == other.width();
  }
  friend bool operator==(const Frame& a, const Frame& b) {
    return a.same_size(b) && a.pixels_ == b.pixels_;
  }

 private:
  Image pixels_;
};

/// Ordered sequence of equally sized frames.
class Clip {
 public:
  Clip(std::vector<Frame> frames, double fps = 10.0, std::string source_id = {});

  std::size_t size() const { return frames_.size(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const Frame& at(std::size_t i) const { return frames_.at(i); }
  const std::vector<Frame>& frames() const { return frames_; }
  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

  Eigen::Index height() const { return frames_.front().height(); }
  Eigen::Index width() const { return frames_.front().width(); }
  double fps() const { return fps_; }
  const std::string& source_id() const { return source_id_; }

 private:
  std::vector<Frame> frames_;
  double fps_;
  std::string source_id_;
};

/// Axis-aligned object box, 0-based pixel coordinates with a top-left origin.
struct BoxAnnotation {
  int frame_index = 0;
  int object_id = 0;
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool fits(Eigen::Index height, Eigen::Index width) const {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && right() <= width && bottom() <= height;
  }
  bool overlaps(const BoxAnnotation& o) const {
    return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
  }
  friend bool operator==(const BoxAnnotation&, const BoxAnnotation&) = default;
};

/// Checks every box against the clip's length and frame bounds.
/// Throws std::invalid_argument naming the first offending box.
void validate_annotations(const std::vector<BoxAnnotation>& boxes, const Clip& clip);

/// Four frames around a centre index: the three network inputs
/// (t, t-T, t-2T) and the future frame t+T used only by the target.
struct FrameWindow {
  std::size_t center = 0;
  std::size_t stride = 1;

  std::size_t previous() const { return center - stride; }
  std::size_t previous2() const { return center - 2 * stride; }
  std::size_t future() const { return center + stride; }
};

/// All t with 2T <= t <= len-1-T, ascending. Empty when the clip is too short.
std::vector<FrameWindow> valid_windows(const Clip& clip, std::size_t stride);
std::vector<FrameWindow> valid_windows(std::size_t clip_length, std::size_t stride);

}  // namespace saved
