#include "saved/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace saved {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& header, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Netpbm header: magic, width, height, maxval, each separated by whitespace
// with optional '#' comments, then exactly one whitespace byte.
struct NetpbmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm(const std::string& buf, const char* magic, const fs::path& path) {
  if (buf.size() < 2 || buf.compare(0, 2, magic) != 0) {
    throw FormatError(path.string() + ": expected " + magic + " netpbm file");
  }
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < buf.size()) {
      if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
        ++pos;
      } else if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(buf.data() + pos, buf.data() + buf.size(), value);
    if (ec != std::errc{} || value <= 0) throw FormatError(path.string() + ": bad netpbm header");
    pos = static_cast<std::size_t>(ptr - buf.data());
    return value;
  };
  NetpbmHeader h;
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    throw FormatError(path.string() + ": bad netpbm header");
  }
  h.data_offset = pos + 1;
  if (h.maxval != 255) {
    throw FormatError(path.string() + ": unsupported bit depth (maxval " + std::to_string(h.maxval) + ")");
  }
  return h;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

std::uint8_t quantize(double v) {
  const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::round(c * 255.0));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

GrayImage8 read_pgm(const fs::path& path) {
  const std::string buf = read_file(path);
  const NetpbmHeader h = parse_netpbm(buf, "P5", path);
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (buf.size() < h.data_offset + n) throw FormatError(path.string() + ": truncated pixel data");
  GrayImage8 img{h.width, h.height, {}};
  img.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                   buf.begin() + static_cast<std::ptrdiff_t>(h.data_offset + n));
  return img;
}

void write_pgm(const fs::path& path, const GrayImage8& image) {
  write_file(path, "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n",
             image.bytes);
}

RgbImage8 read_ppm(const fs::path& path) {
  const std::string buf = read_file(path);
  const NetpbmHeader h = parse_netpbm(buf, "P6", path);
  const std::size_t n = 3 * static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  if (buf.size() < h.data_offset + n) throw FormatError(path.string() + ": truncated pixel data");
  RgbImage8 img{h.width, h.height, {}};
  img.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                   buf.begin() + static_cast<std::ptrdiff_t>(h.data_offset + n));
  return img;
}

void write_ppm(const fs::path& path, const RgbImage8& image) {
  write_file(path, "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n",
             image.bytes);
}

GrayImage8 to_gray8(const Frame& frame) {
  GrayImage8 img{static_cast<int>(frame.width()), static_cast<int>(frame.height()), {}};
  img.bytes.resize(static_cast<std::size_t>(frame.pixels().size()));
  for (Eigen::Index i = 0; i < frame.pixels().size(); ++i) {
    img.bytes[static_cast<std::size_t>(i)] = quantize(frame.pixels().data()[i]);
  }
  return img;
}

Frame from_gray8(const GrayImage8& image) {
  Image px(image.height, image.width);
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    px.data()[i] = static_cast<double>(image.bytes[static_cast<std::size_t>(i)]) / 255.0;
  }
  return Frame(std::move(px));
}

Manifest read_manifest(const fs::path& directory) {
  const fs::path path = directory / "manifest.txt";
  if (!fs::exists(path)) throw FormatError("missing manifest: " + path.string());
  std::istringstream in(read_file(path));
  Manifest m;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty manifest");
  line = trim(line);
  if (line.rfind("fps=", 0) != 0) throw FormatError(path.string() + ": first line must be fps=<float>");
  try {
    m.fps = std::stod(line.substr(4));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad fps value");
  }
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) m.files.push_back(line);
  }
  return m;
}

void write_manifest(const fs::path& directory, const Manifest& manifest) {
  std::ofstream out(directory / "manifest.txt", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + directory.string());
  out << "fps=" << format_double(manifest.fps) << '\n';
  for (const auto& f : manifest.files) out << f << '\n';
  if (!out) throw std::runtime_error("manifest write failed in " + directory.string());
}

Clip load_clip(const fs::path& directory) {
  const Manifest m = read_manifest(directory);
  if (m.files.empty()) throw FormatError(directory.string() + ": manifest lists no frames");
  std::vector<Frame> frames;
  frames.reserve(m.files.size());
  for (const auto& name : m.files) {
    const fs::path p = directory / name;
    if (!fs::exists(p)) throw FormatError("listed frame missing: " + p.string());
    frames.push_back(from_gray8(read_pgm(p)));
    if (!frames.back().same_size(frames.front())) {
      throw FormatError(p.string() + ": inconsistent frame dimensions");
    }
  }
  return Clip(std::move(frames), m.fps, directory.filename().string());
}

void save_clip(const Clip& clip, const fs::path& directory) {
  fs::create_directories(directory);
  Manifest m;
  m.fps = clip.fps();
  for (std::size_t i = 0; i < clip.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.pgm", i);
    write_pgm(directory / name, to_gray8(clip[i]));
    m.files.emplace_back(name);
  }
  write_manifest(directory, m);
}

std::vector<BoxAnnotation> parse_annotations(const std::string& text) {
  std::vector<BoxAnnotation> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    int v[6];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 6; ++k) {
      while (p < end && *p == ' ') ++p;
      auto [ptr, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc{}) throw FormatError("annotations line " + std::to_string(line_no) + ": malformed");
      p = ptr;
      while (p < end && *p == ' ') ++p;
      if (k < 5) {
        if (p == end || *p != ',') throw FormatError("annotations line " + std::to_string(line_no) + ": malformed");
        ++p;
      }
    }
    if (p != end) throw FormatError("annotations line " + std::to_string(line_no) + ": trailing characters");
    BoxAnnotation b{v[0], v[1], v[2], v[3], v[4], v[5]};
    if (b.frame_index < 0 || b.x < 0 || b.y < 0 || b.w < 1 || b.h < 1) {
      throw FormatError("annotations line " + std::to_string(line_no) + ": negative or empty extent");
    }
    out.push_back(b);
  }
  return out;
}

std::vector<BoxAnnotation> load_annotations(const fs::path& path) {
  if (!fs::exists(path)) throw FormatError("annotation file not found: " + path.string());
  return parse_annotations(read_file(path));
}

void save_annotations(const std::vector<BoxAnnotation>& boxes, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& b : boxes) {
    out << b.frame_index << ',' << b.object_id << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h << '\n';
  }
}

}  // namespace saved
