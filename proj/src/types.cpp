#include "saved/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace saved {

Frame::Frame(Image pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) {
    throw std::invalid_argument("frame must be at least 1x1");
  }
  for (Eigen::Index i = 0; i < pixels_.size(); ++i) {
    const double v = pixels_.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("frame intensity out of [0,1]: " + std::to_string(v));
    }
  }
}

Frame::Frame(Eigen::Index height, Eigen::Index width, double fill)
    : Frame(Image::Constant(height, width, fill)) {}

Frame Frame::clamped(const Image& pixels) {
  Image out = pixels.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); });
  return Frame(std::move(out));
}

Clip::Clip(std::vector<Frame> frames, double fps, std::string source_id)
    : frames_(std::move(frames)), fps_(fps), source_id_(std::move(source_id)) {
  if (frames_.empty()) throw std::invalid_argument("clip must contain at least one frame");
  for (const Frame& f : frames_) {
    if (!f.same_size(frames_.front())) {
      throw std::invalid_argument("clip frames differ in size");
    }
  }
}

void validate_annotations(const std::vector<BoxAnnotation>& boxes, const Clip& clip) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BoxAnnotation& b = boxes[i];
    if (b.frame_index < 0 || static_cast<std::size_t>(b.frame_index) >= clip.size()) {
      throw std::invalid_argument("annotation " + std::to_string(i) + ": frame index " +
                                  std::to_string(b.frame_index) + " outside clip");
    }
    if (!b.fits(clip.height(), clip.width())) {
      throw std::invalid_argument("annotation " + std::to_string(i) + ": box outside frame bounds");
    }
  }
}

std::vector<FrameWindow> valid_windows(std::size_t clip_length, std::size_t stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  std::vector<FrameWindow> out;
  for (std::size_t t = 2 * stride; t + stride < clip_length; ++t) out.push_back({t, stride});
  return out;
}

std::vector<FrameWindow> valid_windows(const Clip& clip, std::size_t stride) {
  return valid_windows(clip.size(), stride);
}

}  // namespace saved
