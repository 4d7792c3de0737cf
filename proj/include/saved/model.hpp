#pragma once

#include <cstdint>
#include <vector>

#include "saved/autodiff.hpp"
#include "saved/types.hpp"

namespace saved {

/// Network geometry. Channel width at spatial level l (resolution H/2^l) is
/// min(base_channels * 2^l, max_channels); the bottleneck runs at level
/// `spatial_stages` with the widest setting.
struct ModelConfig {
  std::uint32_t base_channels = 8;
  std::uint32_t max_channels = 128;
  std::uint32_t spatial_stages = 5;
  std::uint32_t stride = 1;  // temporal stride T between input frames
  bool clamp_output = true;

  /// Full-width layout: 16 channels at full resolution rising to 512 at H/32.
  static ModelConfig full_scale() { return {16, 512, 5, 1, true}; }
  /// Tiny layout used for end-to-end gradient checks.
  static ModelConfig gradcheck_scale() { return {2, 8, 2, 1, true}; }

  std::uint32_t channels(std::uint32_t level) const;
  std::uint32_t divisor() const { return 1u << spatial_stages; }
  /// Throws std::invalid_argument on a zero width or stage count.
  void validate() const;
  /// Throws std::invalid_argument unless both extents are divisible by 2^stages.
  void check_input(Eigen::Index height, Eigen::Index width) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename Scalar>
struct ConvLayer {
  ad::Tensor<Scalar> weight;
  ad::Tensor<Scalar> bias;
};

/// Learnable tensors of the appearance encoder, the temporal bottleneck and
/// the reconstruction decoder.
template <typename Scalar>
struct ModelParams {
  ModelConfig config;

  // Encoder: one 3x3 conv block per level 0..S (max pooling between levels)
  // and one 1x1 skip projection per scaling stage, applied to the pooled
  // stage input.
  std::vector<ConvLayer<Scalar>> encoder;
  std::vector<ConvLayer<Scalar>> skip;

  // Bottleneck: two 3x3 convs over the concatenated top-level features, and
  // one 1x1 combiner per level merging the three frames' skips.
  ConvLayer<Scalar> bottleneck_in;
  ConvLayer<Scalar> bottleneck_out;
  std::vector<ConvLayer<Scalar>> combiner;

  // Decoder: per stage a 2x2/stride-2 transposed conv and a 3x3 conv, then a
  // 3x3 head down to one channel. Index 0 is the stage nearest full resolution.
  std::vector<ConvLayer<Scalar>> upsample;
  std::vector<ConvLayer<Scalar>> decoder;
  ConvLayer<Scalar> head;

  /// Every learnable tensor in serialization order.
  std::vector<ad::Tensor<Scalar>*> parameters();
  std::vector<const ad::Tensor<Scalar>*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  template <typename Other>
  ModelParams<Other> cast() const;
};

/// He-normal weights (std = sqrt(2/fan_in)) from a counter-based stream per
/// tensor; zero biases.
template <typename Scalar>
ModelParams<Scalar> init_model(const ModelConfig& config, std::uint64_t seed);

/// Zero-initialised tensors with the right shapes, e.g. as a load target.
template <typename Scalar>
ModelParams<Scalar> allocate_model(const ModelConfig& config);

template <typename Scalar>
struct Encoding {
  ad::Tensor<Scalar>* features = nullptr;       // (N, top_channels, H/2^S, W/2^S)
  std::vector<ad::Tensor<Scalar>*> skips;       // skips[s-1] lives at level s
};

/// Appearance encoder on a (N,1,H,W) batch.
template <typename Scalar>
Encoding<Scalar> encode(ad::Tape<Scalar>& tape, ModelParams<Scalar>& params, ad::Tensor<Scalar>& frames);

/// Prediction for the (t, t-T, t-2T) input triple, each (N,1,H,W).
/// Returns the raw network output; `clamp_output` is applied by `predict`.
template <typename Scalar>
ad::Tensor<Scalar>& forward(ad::Tape<Scalar>& tape, ModelParams<Scalar>& params, ad::Tensor<Scalar>& current,
                            ad::Tensor<Scalar>& previous, ad::Tensor<Scalar>& previous2);

/// Inference on single frames; clamps into [0,1] when the config says so.
template <typename Scalar>
Image predict(ModelParams<Scalar>& params, const Frame& current, const Frame& previous, const Frame& previous2);

/// (1,1,H,W) tensor holding the frame's intensities.
template <typename Scalar>
ad::Tensor<Scalar> frame_tensor(const Frame& frame);
template <typename Scalar>
ad::Tensor<Scalar> image_tensor(const Image& image);

}  // namespace saved
