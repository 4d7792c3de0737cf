#include "saved/compose.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "saved/io.hpp"
#include "saved/targets.hpp"

namespace saved {

Clip background_subtract_clip(const Clip& clip) {
  const Image mean = mean_frame(clip);
  std::vector<Frame> out;
  out.reserve(clip.size());
  for (const Frame& f : clip) out.push_back(Frame::clamped(f.pixels() - mean));
  return Clip(std::move(out), clip.fps(), clip.source_id());
}

Frame median_filter_frame(const Frame& frame, int k) {
  if (k < 3 || k % 2 == 0) throw std::invalid_argument("median kernel must be odd and >= 3");
  const Eigen::Index H = frame.height();
  const Eigen::Index W = frame.width();
  const Eigen::Index r = k / 2;
  Image out(H, W);
  std::vector<double> window(static_cast<std::size_t>(k * k));
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      std::size_t n = 0;
      for (Eigen::Index dy = -r; dy <= r; ++dy) {
        const Eigen::Index yy = std::clamp<Eigen::Index>(y + dy, 0, H - 1);
        for (Eigen::Index dx = -r; dx <= r; ++dx) {
          window[n++] = frame(yy, std::clamp<Eigen::Index>(x + dx, 0, W - 1));
        }
      }
      std::nth_element(window.begin(), mid, window.end());
      out(y, x) = *mid;
    }
  }
  return Frame(std::move(out));
}

Clip median_filter_clip(const Clip& clip, int k) {
  std::vector<Frame> out;
  out.reserve(clip.size());
  for (const Frame& f : clip) out.push_back(median_filter_frame(f, k));
  return Clip(std::move(out), clip.fps(), clip.source_id());
}

ComposedClip compose_channels(const Clip& primary, const Clip& aux) {
  if (primary.size() != aux.size()) throw std::invalid_argument("compose: clips differ in length");
  if (primary.height() != aux.height() || primary.width() != aux.width()) {
    throw std::invalid_argument("compose: clips differ in frame size");
  }
  ComposedClip out;
  out.fps = primary.fps();
  out.frames.reserve(primary.size());
  for (std::size_t t = 0; t < primary.size(); ++t) out.frames.push_back({primary[t], primary[t], aux[t]});
  return out;
}

void save_composed(const ComposedClip& clip, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  Manifest manifest;
  manifest.fps = clip.fps;
  for (std::size_t t = 0; t < clip.size(); ++t) {
    const auto& ch = clip.frames[t];
    RgbImage8 img;
    img.height = static_cast<int>(ch[0].height());
    img.width = static_cast<int>(ch[0].width());
    img.bytes.resize(static_cast<std::size_t>(img.height) * static_cast<std::size_t>(img.width) * 3);
    std::size_t i = 0;
    for (Eigen::Index y = 0; y < ch[0].height(); ++y) {
      for (Eigen::Index x = 0; x < ch[0].width(); ++x) {
        for (const Frame& c : ch) img.bytes[i++] = quantize(c(y, x));
      }
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.ppm", t);
    write_ppm(directory / name, img);
    manifest.files.emplace_back(name);
  }
  write_manifest(directory, manifest);
}

ComposedClip load_composed(const std::filesystem::path& directory) {
  const Manifest manifest = read_manifest(directory);
  ComposedClip out;
  out.fps = manifest.fps;
  for (const std::string& file : manifest.files) {
    const RgbImage8 img = read_ppm(directory / file);
    if (!out.frames.empty() &&
        (img.height != out.frames.front()[0].height() || img.width != out.frames.front()[0].width())) {
      throw FormatError("inconsistent frame size in " + (directory / file).string());
    }
    std::array<Image, 3> planes;
    for (Image& p : planes) p.resize(img.height, img.width);
    std::size_t i = 0;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (Image& p : planes) p(y, x) = img.bytes[i++] / 255.0;
      }
    }
    out.frames.push_back({Frame(planes[0]), Frame(planes[1]), Frame(planes[2])});
  }
  if (out.frames.empty()) throw FormatError("manifest in " + directory.string() + " lists no frames");
  return out;
}

}  // namespace saved
