#include "saved/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "saved/io.hpp"

namespace saved {

namespace {


class Writer {
 public:
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::uint8_t* peek() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  const ModelConfig& c = ckpt.params.config;
  Writer w;
  w.raw("SAVD", 4);
  w.u32(kCheckpointVersion);
  w.u32(c.base_channels);
  w.u32(c.max_channels);
  w.u32(c.spatial_stages);
  w.u32(c.stride);
  w.u32(c.clamp_output ? 1u : 0u);
  w.u64(ckpt.step);
  w.u64(ckpt.seed);
  const auto tensors = ckpt.params.parameters();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    w.u64(static_cast<std::uint64_t>(t->numel()));
    for (ad::Index i = 0; i < t->numel(); ++i) w.f32(t->value()[i]);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(r.peek(), "SAVD", 4) != 0) throw FormatError("checkpoint: bad magic");
  r.skip(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  ModelConfig cfg;
  cfg.base_channels = r.u32();
  cfg.max_channels = r.u32();
  cfg.spatial_stages = r.u32();
  cfg.stride = r.u32();
  const std::uint32_t flags = r.u32();
  cfg.clamp_output = (flags & 1u) != 0;
  Checkpoint ckpt;
  ckpt.step = r.u64();
  ckpt.seed = r.u64();
  try {
    ckpt.params = allocate_model<float>(cfg);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: invalid config: ") + e.what());
  }
  auto tensors = ckpt.params.parameters();
  const std::uint32_t count = r.u32();
  if (count != tensors.size()) throw FormatError("checkpoint: tensor count does not match config");
  for (auto* t : tensors) {
    const std::uint64_t n = r.u64();
    if (n != static_cast<std::uint64_t>(t->numel())) throw FormatError("checkpoint: tensor size does not match config");
    r.need(4 * n);
    for (ad::Index i = 0; i < t->numel(); ++i) t->value()[i] = r.f32();
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace saved
