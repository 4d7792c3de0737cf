#include "saved/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "saved/rng.hpp"

namespace saved {

using ad::Shape;
using ad::Tensor;

std::uint32_t ModelConfig::channels(std::uint32_t level) const {
  std::uint64_t c = base_channels;
  for (std::uint32_t i = 0; i < level && c < max_channels; ++i) c *= 2;
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(c, max_channels));
}

void ModelConfig::validate() const {
  if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
  if (max_channels < base_channels) throw std::invalid_argument("max_channels must be >= base_channels");
  if (spatial_stages < 1 || spatial_stages > 12) throw std::invalid_argument("spatial_stages must be in [1,12]");
  if (stride < 1) throw std::invalid_argument("temporal stride must be >= 1");
}

void ModelConfig::check_input(Eigen::Index height, Eigen::Index width) const {
  const Eigen::Index d = divisor();
  if (height < d || width < d || height % d != 0 || width % d != 0) {
    throw std::invalid_argument("frame size " + std::to_string(height) + "x" + std::to_string(width) +
                                " is not divisible by 2^" + std::to_string(spatial_stages));
  }
}

namespace {

template <typename Scalar>
ConvLayer<Scalar> make_conv(ad::Index in, ad::Index out, ad::Index k) {
  return {Tensor<Scalar>(Shape{out, in, k, k}, Scalar(0), true), Tensor<Scalar>(Shape{1, out, 1, 1}, Scalar(0), true)};
}

template <typename Scalar>
ConvLayer<Scalar> make_transpose(ad::Index in, ad::Index out) {
  return {Tensor<Scalar>(Shape{in, out, 2, 2}, Scalar(0), true), Tensor<Scalar>(Shape{1, out, 1, 1}, Scalar(0), true)};
}

// Fan-in seen by one output element.
template <typename Scalar>
double fan_in(const ConvLayer<Scalar>& layer, bool transposed) {
  const Shape& s = layer.weight.shape();
  return transposed ? static_cast<double>(s.n) : static_cast<double>(s.c * s.h * s.w);
}

}  // namespace

template <typename Scalar>
ModelParams<Scalar> allocate_model(const ModelConfig& config) {
  config.validate();
  ModelParams<Scalar> p;
  p.config = config;
  const std::uint32_t S = config.spatial_stages;
  auto c = [&](std::uint32_t l) { return static_cast<ad::Index>(config.channels(l)); };
  for (std::uint32_t l = 0; l <= S; ++l) p.encoder.push_back(make_conv<Scalar>(l == 0 ? 1 : c(l - 1), c(l), 3));
  for (std::uint32_t s = 1; s <= S; ++s) p.skip.push_back(make_conv<Scalar>(c(s - 1), c(s), 1));
  p.bottleneck_in = make_conv<Scalar>(3 * c(S), c(S), 3);
  p.bottleneck_out = make_conv<Scalar>(c(S), c(S), 3);
  for (std::uint32_t s = 1; s <= S; ++s) p.combiner.push_back(make_conv<Scalar>(3 * c(s), c(s), 1));
  for (std::uint32_t s = 1; s <= S; ++s) {
    p.upsample.push_back(make_transpose<Scalar>(2 * c(s), c(s - 1)));
    p.decoder.push_back(make_conv<Scalar>(c(s - 1), c(s - 1), 3));
  }
  p.head = make_conv<Scalar>(c(0), 1, 3);
  return p;
}

template <typename Scalar>
ModelParams<Scalar> init_model(const ModelConfig& config, std::uint64_t seed) {
  ModelParams<Scalar> p = allocate_model<Scalar>(config);
  std::uint64_t stream = 0;
  auto fill = [&](ConvLayer<Scalar>& layer, bool transposed) {
    CounterRng rng(seed, stream++);
    const double std = std::sqrt(2.0 / fan_in(layer, transposed));
    for (ad::Index i = 0; i < layer.weight.numel(); ++i) layer.weight.value()[i] = static_cast<Scalar>(rng.normal(0.0, std));
  };
  for (auto& l : p.encoder) fill(l, false);
  for (auto& l : p.skip) fill(l, false);
  fill(p.bottleneck_in, false);
  fill(p.bottleneck_out, false);
  for (auto& l : p.combiner) fill(l, false);
  for (std::size_t s = 0; s < p.upsample.size(); ++s) {
    fill(p.upsample[s], true);
    fill(p.decoder[s], false);
  }
  fill(p.head, false);
  return p;
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> ModelParams<Scalar>::parameters() {
  std::vector<Tensor<Scalar>*> out;
  auto add = [&](ConvLayer<Scalar>& l) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  };
  for (auto& l : encoder) add(l);
  for (auto& l : skip) add(l);
  add(bottleneck_in);
  add(bottleneck_out);
  for (auto& l : combiner) add(l);
  for (std::size_t s = 0; s < upsample.size(); ++s) {
    add(upsample[s]);
    add(decoder[s]);
  }
  add(head);
  return out;
}

template <typename Scalar>
std::vector<const Tensor<Scalar>*> ModelParams<Scalar>::parameters() const {
  auto mutable_params = const_cast<ModelParams<Scalar>*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

template <typename Scalar>
std::size_t ModelParams<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : parameters()) n += static_cast<std::size_t>(t->numel());
  return n;
}

template <typename Scalar>
void ModelParams<Scalar>::zero_grad() {
  for (auto* t : parameters()) t->zero_grad();
}

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::cast() const {
  ModelParams<Other> out = allocate_model<Other>(config);
  auto src = parameters();
  auto dst = out.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value() = src[i]->value().template cast<Other>();
  return out;
}

template <typename Scalar>
Encoding<Scalar> encode(ad::Tape<Scalar>& tape, ModelParams<Scalar>& params, Tensor<Scalar>& frames) {
  const ModelConfig& cfg = params.config;
  if (frames.shape().c != 1) throw std::invalid_argument("encode: expected single-channel frames");
  cfg.check_input(frames.shape().h, frames.shape().w);
  Encoding<Scalar> enc;
  Tensor<Scalar>* x = &frames;
  for (std::uint32_t l = 0; l <= cfg.spatial_stages; ++l) {
    if (l > 0) {
      x = &ad::maxpool2d(tape, *x);
      ConvLayer<Scalar>& sk = params.skip[l - 1];
      enc.skips.push_back(&ad::conv2d(tape, *x, sk.weight, sk.bias, 0));
    }
    ConvLayer<Scalar>& conv = params.encoder[l];
    x = &ad::relu(tape, ad::conv2d(tape, *x, conv.weight, conv.bias, 1));
  }
  enc.features = x;
  return enc;
}

template <typename Scalar>
Tensor<Scalar>& forward(ad::Tape<Scalar>& tape, ModelParams<Scalar>& params, Tensor<Scalar>& current,
                        Tensor<Scalar>& previous, Tensor<Scalar>& previous2) {
  if (!(current.shape() == previous.shape()) || !(current.shape() == previous2.shape())) {
    throw std::invalid_argument("forward: input frames differ in shape");
  }
  Encoding<Scalar> et = encode(tape, params, current);
  Encoding<Scalar> e1 = encode(tape, params, previous);
  Encoding<Scalar> e2 = encode(tape, params, previous2);

  Tensor<Scalar>* d = &ad::concat_channels(tape, {et.features, e1.features, e2.features});
  d = &ad::relu(tape, ad::conv2d(tape, *d, params.bottleneck_in.weight, params.bottleneck_in.bias, 1));
  d = &ad::relu(tape, ad::conv2d(tape, *d, params.bottleneck_out.weight, params.bottleneck_out.bias, 1));

  for (std::uint32_t s = params.config.spatial_stages; s >= 1; --s) {
    const std::size_t i = s - 1;
    Tensor<Scalar>& skips = ad::concat_channels(tape, {et.skips[i], e1.skips[i], e2.skips[i]});
    Tensor<Scalar>& merged = ad::conv2d(tape, skips, params.combiner[i].weight, params.combiner[i].bias, 0);
    Tensor<Scalar>& h = ad::concat_channels(tape, {d, &merged});
    Tensor<Scalar>& up = ad::relu(tape, ad::conv_transpose2d(tape, h, params.upsample[i].weight, params.upsample[i].bias));
    d = &ad::relu(tape, ad::conv2d(tape, up, params.decoder[i].weight, params.decoder[i].bias, 1));
  }
  return ad::conv2d(tape, *d, params.head.weight, params.head.bias, 1);
}

template <typename Scalar>
Tensor<Scalar> image_tensor(const Image& image) {
  Tensor<Scalar> t(Shape{1, 1, image.rows(), image.cols()});
  for (Eigen::Index i = 0; i < image.size(); ++i) t.value()[i] = static_cast<Scalar>(image.data()[i]);
  return t;
}

template <typename Scalar>
Tensor<Scalar> frame_tensor(const Frame& frame) {
  return image_tensor<Scalar>(frame.pixels());
}

template <typename Scalar>
Image predict(ModelParams<Scalar>& params, const Frame& current, const Frame& previous, const Frame& previous2) {
  ad::Tape<Scalar> tape(false);
  Tensor<Scalar> a = frame_tensor<Scalar>(current);
  Tensor<Scalar> b = frame_tensor<Scalar>(previous);
  Tensor<Scalar> c = frame_tensor<Scalar>(previous2);
  const Tensor<Scalar>& out = forward(tape, params, a, b, c);
  Image img(current.height(), current.width());
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const double v = static_cast<double>(out.value()[i]);
    img.data()[i] = params.config.clamp_output ? std::clamp(v, 0.0, 1.0) : v;
  }
  return img;
}

#define SAVED_INSTANTIATE(S)                                                                                   \
  template struct ModelParams<S>;                                                                              \
  template ModelParams<S> allocate_model<S>(const ModelConfig&);                                               \
  template ModelParams<S> init_model<S>(const ModelConfig&, std::uint64_t);                                    \
  template Encoding<S> encode<S>(ad::Tape<S>&, ModelParams<S>&, Tensor<S>&);                                   \
  template Tensor<S>& forward<S>(ad::Tape<S>&, ModelParams<S>&, Tensor<S>&, Tensor<S>&, Tensor<S>&);           \
  template Tensor<S> image_tensor<S>(const Image&);                                                            \
  template Tensor<S> frame_tensor<S>(const Frame&);                                                            \
  template Image predict<S>(ModelParams<S>&, const Frame&, const Frame&, const Frame&);

SAVED_INSTANTIATE(float)
SAVED_INSTANTIATE(double)
#undef SAVED_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace saved
