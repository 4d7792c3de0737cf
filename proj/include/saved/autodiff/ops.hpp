#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "saved/autodiff/tape.hpp"
#include "saved/autodiff/tensor.hpp"

// Differentiable operations. Each op allocates its output on the tape and
// records a closure that accumulates input gradients. Inputs are taken by
// non-const reference because backward writes into their gradient buffers.
//
// All reductions run in a fixed order, so forward and backward passes are
// bit-reproducible for identical inputs.

namespace saved::ad {

namespace detail {

template <typename Scalar>
using Matrix = typename Tensor<Scalar>::Matrix;

inline void fail(const std::string& op, const std::string& why) {
  throw std::invalid_argument(op + ": " + why);
}

/// Unfolds one (C,H,W) item into a (C*k*k, H*W) patch matrix for a
/// stride-1 correlation with `pad` zero padding and same-size output.
template <typename Scalar, typename In>
void im2col(const In& x, Index channels, Index height, Index width, Index k, Index pad, Matrix<Scalar>& col) {
  col.resize(channels * k * k, height * width);
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        Scalar* dst = col.row((c * k + ky) * k + kx).data();
        for (Index y = 0; y < height; ++y) {
          const Index sy = y + ky - pad;
          Scalar* row = dst + y * width;
          if (sy < 0 || sy >= height) {
            std::fill(row, row + width, Scalar(0));
            continue;
          }
          const Scalar* src = x.row(c).data() + sy * width;
          for (Index xx = 0; xx < width; ++xx) {
            const Index sx = xx + kx - pad;
            row[xx] = (sx < 0 || sx >= width) ? Scalar(0) : src[sx];
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters patch gradients back onto the image.
template <typename Scalar, typename Out>
void col2im_add(const Matrix<Scalar>& col, Index channels, Index height, Index width, Index k, Index pad, Out&& dx) {
  for (Index c = 0; c < channels; ++c) {
    Scalar* dst = dx.row(c).data();
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Scalar* src = col.row((c * k + ky) * k + kx).data();
        for (Index y = 0; y < height; ++y) {
          const Index sy = y + ky - pad;
          if (sy < 0 || sy >= height) continue;
          const Scalar* row = src + y * width;
          Scalar* out = dst + sy * width;
          for (Index xx = 0; xx < width; ++xx) {
            const Index sx = xx + kx - pad;
            if (sx >= 0 && sx < width) out[sx] += row[xx];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Stride-1 cross-correlation with square odd kernels.
/// weights: (out_ch, in_ch, k, k); bias: (1, out_ch, 1, 1); `pad` must be (k-1)/2.
template <typename Scalar>
Tensor<Scalar>& conv2d(Tape<Scalar>& tape, Tensor<Scalar>& input, Tensor<Scalar>& weights, Tensor<Scalar>& bias,
                       Index pad = 1) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  if (ws.h != ws.w || ws.h % 2 == 0) detail::fail("conv2d", "kernel must be square and odd");
  if (ws.c != is.c) {
    detail::fail("conv2d", "weights expect " + std::to_string(ws.c) + " input channels, got " + std::to_string(is.c));
  }
  if (2 * pad != ws.h - 1) detail::fail("conv2d", "padding must preserve spatial size");
  if (bias.numel() != ws.n) detail::fail("conv2d", "bias length must equal output channels");

  const Index k = ws.h;
  const Index out_ch = ws.n;
  const bool needs_grad =
      tape.recording() && (input.requires_grad() || weights.requires_grad() || bias.requires_grad());
  Tensor<Scalar>& out = tape.make({is.n, out_ch, is.h, is.w}, needs_grad);

  typename Tensor<Scalar>::ConstMatrixMap wmat(weights.value().data(), out_ch, is.c * k * k);
  // 1x1 convolutions read the input directly; larger kernels keep their
  // patch matrices for the backward pass.
  auto cols = std::make_shared<std::vector<detail::Matrix<Scalar>>>();
  if (k > 1) cols->resize(needs_grad ? static_cast<std::size_t>(is.n) : 1);
  for (Index n = 0; n < is.n; ++n) {
    auto y = out.item(n);
    if (k == 1) {
      y.noalias() = wmat * input.item(n);
    } else {
      auto& col = (*cols)[needs_grad ? static_cast<std::size_t>(n) : 0];
      detail::im2col<Scalar>(input.item(n), is.c, is.h, is.w, k, pad, col);
      y.noalias() = wmat * col;
    }
    for (Index o = 0; o < out_ch; ++o) y.row(o).array() += bias.value()[o];
  }
  if (!needs_grad) return out;

  tape.record([&input, &weights, &bias, &out, cols, k, pad]() {
    const Shape& s = input.shape();
    const Index oc = weights.shape().n;
    typename Tensor<Scalar>::ConstMatrixMap w(weights.value().data(), oc, s.c * k * k);
    for (Index n = 0; n < s.n; ++n) {
      auto dy = out.grad_item(n);
      if (weights.requires_grad()) {
        typename Tensor<Scalar>::MatrixMap dw(weights.grad().data(), oc, s.c * k * k);
        if (k == 1) {
          dw.noalias() += dy * input.item(n).transpose();
        } else {
          dw.noalias() += dy * (*cols)[static_cast<std::size_t>(n)].transpose();
        }
      }
      if (bias.requires_grad()) {
        for (Index o = 0; o < oc; ++o) bias.grad()[o] += dy.row(o).sum();
      }
      if (input.requires_grad()) {
        if (k == 1) {
          input.grad_item(n).noalias() += w.transpose() * dy;
        } else {
          detail::Matrix<Scalar> dcol = w.transpose() * dy;
          detail::col2im_add<Scalar>(dcol, s.c, s.h, s.w, k, pad, input.grad_item(n));
        }
      }
    }
  });
  return out;
}

/// Transposed convolution with a 2x2 kernel and stride 2; doubles H and W.
/// weights: (in_ch, out_ch, 2, 2); bias: (1, out_ch, 1, 1).
template <typename Scalar>
Tensor<Scalar>& conv_transpose2d(Tape<Scalar>& tape, Tensor<Scalar>& input, Tensor<Scalar>& weights,
                                 Tensor<Scalar>& bias) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  if (ws.h != 2 || ws.w != 2) detail::fail("conv_transpose2d", "kernel must be 2x2");
  if (ws.n != is.c) {
    detail::fail("conv_transpose2d",
                 "weights expect " + std::to_string(ws.n) + " input channels, got " + std::to_string(is.c));
  }
  if (bias.numel() != ws.c) detail::fail("conv_transpose2d", "bias length must equal output channels");

  const Index oc = ws.c;
  const Index h = is.h;
  const Index w = is.w;
  const bool needs_grad =
      tape.recording() && (input.requires_grad() || weights.requires_grad() || bias.requires_grad());
  Tensor<Scalar>& out = tape.make({is.n, oc, 2 * h, 2 * w}, needs_grad);

  // Row (o*4 + a*2 + b) of `taps` holds output channel o at sub-pixel (a,b).
  typename Tensor<Scalar>::ConstMatrixMap wmat(weights.value().data(), is.c, oc * 4);
  detail::Matrix<Scalar> taps;
  for (Index n = 0; n < is.n; ++n) {
    taps.noalias() = wmat.transpose() * input.item(n);
    auto y = out.item(n);
    for (Index o = 0; o < oc; ++o) {
      const Scalar b0 = bias.value()[o];
      Scalar* dst = y.row(o).data();
      for (Index a = 0; a < 2; ++a) {
        for (Index b = 0; b < 2; ++b) {
          const Scalar* src = taps.row(o * 4 + a * 2 + b).data();
          for (Index i = 0; i < h; ++i) {
            Scalar* row = dst + (2 * i + a) * (2 * w) + b;
            for (Index j = 0; j < w; ++j) row[2 * j] = src[i * w + j] + b0;
          }
        }
      }
    }
  }
  if (!needs_grad) return out;

  tape.record([&input, &weights, &bias, &out]() {
    const Shape& s = input.shape();
    const Index oc = weights.shape().c;
    const Index h = s.h;
    const Index w = s.w;
    typename Tensor<Scalar>::ConstMatrixMap wm(weights.value().data(), s.c, oc * 4);
    detail::Matrix<Scalar> dtaps(oc * 4, h * w);
    for (Index n = 0; n < s.n; ++n) {
      auto dy = out.grad_item(n);
      for (Index o = 0; o < oc; ++o) {
        const Scalar* src = dy.row(o).data();
        Scalar bsum(0);
        for (Index a = 0; a < 2; ++a) {
          for (Index b = 0; b < 2; ++b) {
            Scalar* dst = dtaps.row(o * 4 + a * 2 + b).data();
            for (Index i = 0; i < h; ++i) {
              const Scalar* row = src + (2 * i + a) * (2 * w) + b;
              for (Index j = 0; j < w; ++j) dst[i * w + j] = row[2 * j];
            }
          }
        }
        if (bias.requires_grad()) {
          for (Index p = 0; p < 4 * h * w; ++p) bsum += src[p];
          bias.grad()[o] += bsum;
        }
      }
      if (weights.requires_grad()) {
        typename Tensor<Scalar>::MatrixMap dw(weights.grad().data(), s.c, oc * 4);
        dw.noalias() += input.item(n) * dtaps.transpose();
      }
      if (input.requires_grad()) input.grad_item(n).noalias() += wm * dtaps;
    }
  });
  return out;
}

/// 2x2 max pooling, stride 2. Gradient goes to the first maximum in
/// row-major scan order of each window.
template <typename Scalar>
Tensor<Scalar>& maxpool2d(Tape<Scalar>& tape, Tensor<Scalar>& input) {
  const Shape& is = input.shape();
  if (is.h % 2 != 0 || is.w % 2 != 0) {
    detail::fail("maxpool2d", "height and width must be even, got " + to_string(is));
  }
  const Index oh = is.h / 2;
  const Index ow = is.w / 2;
  Tensor<Scalar>& out = tape.make({is.n, is.c, oh, ow}, input.requires_grad());
  auto argmax = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(out.numel()));
  const Scalar* x = input.value().data();
  Scalar* y = out.value().data();
  Index o = 0;
  for (Index nc = 0; nc < is.n * is.c; ++nc) {
    const Index base = nc * is.plane();
    for (Index i = 0; i < oh; ++i) {
      for (Index j = 0; j < ow; ++j, ++o) {
        Index best = base + (2 * i) * is.w + 2 * j;
        const Index cand[3] = {best + 1, best + is.w, best + is.w + 1};
        for (Index c : cand) {
          if (x[c] > x[best]) best = c;
        }
        y[o] = x[best];
        (*argmax)[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  if (!input.requires_grad()) return out;
  tape.record([&input, &out, argmax]() {
    const Scalar* dy = out.grad().data();
    Scalar* dx = input.grad().data();
    for (std::size_t o = 0; o < argmax->size(); ++o) dx[(*argmax)[o]] += dy[o];
  });
  return out;
}

/// max(0, x); the subgradient at 0 is 0.
template <typename Scalar>
Tensor<Scalar>& relu(Tape<Scalar>& tape, Tensor<Scalar>& input) {
  Tensor<Scalar>& out = tape.make(input.shape(), input.requires_grad());
  out.value() = input.value().cwiseMax(Scalar(0));
  if (!input.requires_grad()) return out;
  tape.record([&input, &out]() {
    input.grad().array() += (input.value().array() > Scalar(0)).select(out.grad().array(), Scalar(0));
  });
  return out;
}

/// Channel concatenation in argument order.
template <typename Scalar>
Tensor<Scalar>& concat_channels(Tape<Scalar>& tape, std::vector<Tensor<Scalar>*> parts) {
  if (parts.empty()) detail::fail("concat_channels", "no inputs");
  const Shape& first = parts.front()->shape();
  Index channels = 0;
  bool needs_grad = false;
  for (const Tensor<Scalar>* p : parts) {
    const Shape& s = p->shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      detail::fail("concat_channels", "batch/height/width mismatch: " + to_string(s) + " vs " + to_string(first));
    }
    channels += s.c;
    needs_grad = needs_grad || p->requires_grad();
  }
  Tensor<Scalar>& out = tape.make({first.n, channels, first.h, first.w}, needs_grad);
  for (Index n = 0; n < first.n; ++n) {
    Index c0 = 0;
    for (Tensor<Scalar>* p : parts) {
      out.item(n).middleRows(c0, p->shape().c) = p->item(n);
      c0 += p->shape().c;
    }
  }
  if (!needs_grad) return out;
  tape.record([parts = std::move(parts), &out]() {
    for (Index n = 0; n < out.shape().n; ++n) {
      Index c0 = 0;
      for (Tensor<Scalar>* p : parts) {
        if (p->requires_grad()) p->grad_item(n) += out.grad_item(n).middleRows(c0, p->shape().c);
        c0 += p->shape().c;
      }
    }
  });
  return out;
}

template <typename Scalar>
Tensor<Scalar>& concat_channels(Tape<Scalar>& tape, std::initializer_list<Tensor<Scalar>*> parts) {
  return concat_channels(tape, std::vector<Tensor<Scalar>*>(parts));
}

/// Mean of squared differences; returns a (1,1,1,1) tensor.
/// The target is treated as a constant and must outlive the backward pass.
template <typename Scalar>
Tensor<Scalar>& mse_loss(Tape<Scalar>& tape, Tensor<Scalar>& prediction, const Tensor<Scalar>& target) {
  if (!(prediction.shape() == target.shape())) {
    detail::fail("mse_loss", "shape mismatch " + to_string(prediction.shape()) + " vs " + to_string(target.shape()));
  }
  Tensor<Scalar>& out = tape.make({1, 1, 1, 1}, prediction.requires_grad());
  const Index count = prediction.numel();
  Scalar sum(0);
  const Scalar* p = prediction.value().data();
  const Scalar* t = target.value().data();
  for (Index i = 0; i < count; ++i) {
    const Scalar d = p[i] - t[i];
    sum += d * d;
  }
  out.value()[0] = sum / static_cast<Scalar>(count);
  if (!prediction.requires_grad()) return out;
  tape.record([&prediction, &target, &out, count]() {
    const Scalar scale = Scalar(2) * out.grad()[0] / static_cast<Scalar>(count);
    prediction.grad().array() += scale * (prediction.value() - target.value()).array();
  });
  return out;
}

}  // namespace saved::ad
