#include "saved/targets.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace saved {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_frames(const Clip& clip, std::size_t t, std::size_t past, std::size_t future, const char* what) {
  if (t < past || t + future >= clip.size()) {
    throw std::out_of_range(std::string(what) + ": window around t=" + std::to_string(t) +
                            " leaves the clip of " + std::to_string(clip.size()) + " frames");
  }
}

}  // namespace

TargetKind parse_target_kind(const std::string& name) {
  if (name == "raw") return RawTarget{};
  if (name == "bgsub") return BackgroundSubTarget{};
  if (name == "absdiff") return AbsDiffTarget{1};
  if (name == "sigma") return SigmaTarget{2};
  if (name == "sum-mean") return SumMinusMeanTarget{3};
  // Parameterised spellings, as produced by target_kind_name.
  auto suffix = [&](std::string_view prefix) -> std::optional<std::size_t> {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    std::size_t v = 0;
    const char* first = name.data() + prefix.size();
    const char* last = name.data() + name.size();
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last || v == 0) return std::nullopt;
    return v;
  };
  std::optional<TargetKind> kind;
  if (auto v = suffix("inv-pfdwt")) {
    kind = PositiveFrameDiff{*v, true};
  } else if (auto v = suffix("pfdwt")) {
    kind = PositiveFrameDiff{*v, false};
  } else if (auto v = suffix("absdiff")) {
    kind = AbsDiffTarget{*v};
  } else if (auto v = suffix("sigma")) {
    kind = SigmaTarget{*v};
  } else if (auto v = suffix("sum-mean")) {
    kind = SumMinusMeanTarget{*v};
  }
  if (kind) {
    validate(*kind);
    return *kind;
  }
  std::string valid;
  for (const std::string& n : target_kind_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown target '" + name + "' (valid: " + valid + ")");
}

const std::vector<std::string>& target_kind_names() {
  static const std::vector<std::string> names{"pfdwt1", "pfdwt2", "inv-pfdwt1", "raw",
                                              "absdiff", "bgsub", "sigma", "sum-mean"};
  return names;
}

std::string target_kind_name(const TargetKind& kind) {
  return std::visit(
      overloaded{
          [](const PositiveFrameDiff& k) {
            return (k.inverted ? std::string("inv-pfdwt") : std::string("pfdwt")) + std::to_string(k.stride);
          },
          [](const RawTarget&) { return std::string("raw"); },
          [](const AbsDiffTarget& k) { return "absdiff" + std::to_string(k.stride); },
          [](const BackgroundSubTarget&) { return std::string("bgsub"); },
          [](const SigmaTarget& k) { return "sigma" + std::to_string(k.radius); },
          [](const SumMinusMeanTarget& k) { return "sum-mean" + std::to_string(k.window); },
      },
      kind);
}

void validate(const TargetKind& kind) {
  std::visit(overloaded{
                 [](const PositiveFrameDiff& k) {
                   if (k.stride < 1) throw std::invalid_argument("PFD stride must be >= 1");
                 },
                 [](const RawTarget&) {},
                 [](const AbsDiffTarget& k) {
                   if (k.stride < 1) throw std::invalid_argument("absdiff stride must be >= 1");
                 },
                 [](const BackgroundSubTarget&) {},
                 [](const SigmaTarget& k) {
                   if (k.radius < 1) throw std::invalid_argument("sigma radius must be >= 1");
                 },
                 [](const SumMinusMeanTarget& k) {
                   if (k.window < 3 || k.window % 2 == 0) {
                     throw std::invalid_argument("sum-mean window must be odd and >= 3");
                   }
                 },
             },
             kind);
}

TemporalReach temporal_reach(const TargetKind& kind) {
  return std::visit(overloaded{
                        [](const PositiveFrameDiff& k) { return TemporalReach{k.stride, k.stride}; },
                        [](const RawTarget&) { return TemporalReach{0, 0}; },
                        [](const AbsDiffTarget& k) { return TemporalReach{0, k.stride}; },
                        [](const BackgroundSubTarget&) { return TemporalReach{0, 0}; },
                        [](const SigmaTarget& k) { return TemporalReach{k.radius, k.radius}; },
                        [](const SumMinusMeanTarget& k) {
                          return TemporalReach{k.window / 2, k.window / 2};
                        },
                    },
                    kind);
}

Image mean_frame(const Clip& clip) {
  Image acc = Image::Zero(clip.height(), clip.width());
  for (const Frame& f : clip) acc += f.pixels();
  return acc / static_cast<double>(clip.size());
}

Image pfd_sum(const Image& previous, const Image& current, const Image& future, bool inverted) {
  if (inverted) {
    return (previous - current).cwiseMin(0.0) + current + (future - current).cwiseMin(0.0);
  }
  return (previous - current).cwiseMax(0.0) + current + (future - current).cwiseMax(0.0);
}

Frame pfd_target(const Clip& clip, const FrameWindow& window, bool inverted) {
  require_frames(clip, window.center, 2 * window.stride, window.stride, "pfd_target");
  Image s = pfd_sum(clip[window.previous()].pixels(), clip[window.center].pixels(),
                    clip[window.future()].pixels(), inverted);
  return Frame::clamped(s);
}

Frame abs_diff_target(const Clip& clip, std::size_t t, std::size_t stride) {
  require_frames(clip, t, 0, stride, "abs_diff_target");
  return Frame((clip[t].pixels() - clip[t + stride].pixels()).cwiseAbs());
}

Frame background_sub_target(const Clip& clip, std::size_t t, const Image& mean) {
  require_frames(clip, t, 0, 0, "background_sub_target");
  return Frame::clamped(clip[t].pixels() - mean);
}

Frame background_sub_target(const Clip& clip, std::size_t t) {
  return background_sub_target(clip, t, mean_frame(clip));
}

Frame sigma_target(const Clip& clip, std::size_t t, std::size_t radius) {
  require_frames(clip, t, radius, radius, "sigma_target");
  // Deviations from the centre frame: exact zero on a constant window.
  const double n = static_cast<double>(2 * radius + 1);
  const Image& centre = clip[t].pixels();
  Image sum = Image::Zero(clip.height(), clip.width());
  Image sum_sq = Image::Zero(clip.height(), clip.width());
  for (std::size_t k = t - radius; k <= t + radius; ++k) {
    const Image d = clip[k].pixels() - centre;
    sum += d;
    sum_sq += d.cwiseProduct(d);
  }
  const Image mean = sum / n;
  const Image var = (sum_sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  return Frame::clamped(var.cwiseSqrt());
}

Frame sum_minus_mean_target(const Clip& clip, std::size_t t, std::size_t window, const Image& mean) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("sum_minus_mean_target: window must be odd");
  const std::size_t half = window / 2;
  require_frames(clip, t, half, half, "sum_minus_mean_target");
  Image sum = Image::Zero(clip.height(), clip.width());
  for (std::size_t k = t - half; k <= t + half; ++k) sum += clip[k].pixels();
  return Frame::clamped(sum - static_cast<double>(window) * mean);
}

Frame sum_minus_mean_target(const Clip& clip, std::size_t t, std::size_t window) {
  return sum_minus_mean_target(clip, t, window, mean_frame(clip));
}

TargetBuilder::TargetBuilder(const Clip& clip, TargetKind kind, bool clamp_target)
    : clip_(clip), kind_(std::move(kind)), clamp_(clamp_target) {
  validate(kind_);
  if (std::holds_alternative<BackgroundSubTarget>(kind_) || std::holds_alternative<SumMinusMeanTarget>(kind_)) {
    mean_ = mean_frame(clip_);
  }
}

Image TargetBuilder::operator()(std::size_t t) const {
  return std::visit(
      overloaded{
          [&](const PositiveFrameDiff& k) -> Image {
            require_frames(clip_, t, k.stride, k.stride, "pfd target");
            Image s = pfd_sum(clip_[t - k.stride].pixels(), clip_[t].pixels(), clip_[t + k.stride].pixels(),
                              k.inverted);
            return clamp_ ? Frame::clamped(s).pixels() : s;
          },
          [&](const RawTarget&) -> Image {
            require_frames(clip_, t, 0, 0, "raw target");
            return clip_[t].pixels();
          },
          [&](const AbsDiffTarget& k) -> Image { return abs_diff_target(clip_, t, k.stride).pixels(); },
          [&](const BackgroundSubTarget&) -> Image {
            if (!clamp_) {
              require_frames(clip_, t, 0, 0, "background_sub_target");
              return clip_[t].pixels() - mean_;
            }
            return background_sub_target(clip_, t, mean_).pixels();
          },
          [&](const SigmaTarget& k) -> Image { return sigma_target(clip_, t, k.radius).pixels(); },
          [&](const SumMinusMeanTarget& k) -> Image {
            if (!clamp_) {
              const std::size_t half = k.window / 2;
              require_frames(clip_, t, half, half, "sum_minus_mean_target");
              Image sum = Image::Zero(clip_.height(), clip_.width());
              for (std::size_t j = t - half; j <= t + half; ++j) sum += clip_[j].pixels();
              return (sum - static_cast<double>(k.window) * mean_).cwiseMax(0.0);
            }
            return sum_minus_mean_target(clip_, t, k.window, mean_).pixels();
          },
      },
      kind_);
}

Frame compute_target(const Clip& clip, std::size_t t, const TargetKind& kind) {
  return Frame(TargetBuilder(clip, kind, true)(t));
}

}  // namespace saved
