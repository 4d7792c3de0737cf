#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "saved/types.hpp"

namespace saved {

/// Malformed or unreadable on-disk data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// round(clamp(v,0,1) * 255), halves rounded away from zero.
std::uint8_t quantize(double v);

/// 8-bit grayscale P5 image.
struct GrayImage8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bytes;
};

/// 8-bit interleaved RGB P6 image.
struct RgbImage8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bytes;
};

GrayImage8 read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage8& image);
RgbImage8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage8& image);

GrayImage8 to_gray8(const Frame& frame);
Frame from_gray8(const GrayImage8& image);

/// `manifest.txt`: first line `fps=<float>`, then one frame filename per line.
struct Manifest {
  double fps = 10.0;
  std::vector<std::string> files;
};
Manifest read_manifest(const std::filesystem::path& directory);
void write_manifest(const std::filesystem::path& directory, const Manifest& manifest);

/// Loads the frames listed in `<directory>/manifest.txt`, in manifest order.
Clip load_clip(const std::filesystem::path& directory);
/// Writes `frame_00000.pgm`, ... plus the manifest. Creates the directory.
void save_clip(const Clip& clip, const std::filesystem::path& directory);

/// Parses `frame,id,x,y,w,h` lines. Blank lines are skipped.
std::vector<BoxAnnotation> load_annotations(const std::filesystem::path& path);
std::vector<BoxAnnotation> parse_annotations(const std::string& text);
void save_annotations(const std::vector<BoxAnnotation>& boxes, const std::filesystem::path& path);

/// Shortest decimal representation that round-trips.
std::string format_double(double v);

}  // namespace saved
