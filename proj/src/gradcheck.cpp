#include "saved/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "saved/autodiff.hpp"
#include "saved/model.hpp"
#include "saved/rng.hpp"

namespace saved {

namespace {

using ad::Shape;
using T = ad::Tensor<double>;
using Tape = ad::Tape<double>;
using Build = std::function<T&(Tape&)>;

T random_tensor(Shape shape, CounterRng& rng, double lo, double hi) {
  T t(shape);
  for (ad::Index i = 0; i < t.numel(); ++i) t.value()[i] = lo + (hi - lo) * rng.uniform();
  return t;
}

std::vector<ad::Index> pick_entries(ad::Index n, std::size_t limit, CounterRng& rng) {
  std::vector<ad::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), ad::Index{0});
  if (idx.size() <= limit) return idx;
  for (std::size_t i = 0; i < limit; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

GradcheckResult check(const std::string& name, const Build& build, const std::vector<T*>& inputs,
                      const GradcheckOptions& opt, CounterRng& rng) {
  for (T* t : inputs) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  {
    Tape tape;
    tape.backward(build(tape));
  }
  std::vector<T::Vector> analytic;
  for (T* t : inputs) analytic.push_back(t->grad());
  if (opt.corrupt == name) analytic.front()[0] += 1e-3 * (1.0 + std::abs(analytic.front()[0]));

  auto eval = [&] {
    Tape tape(false);
    return build(tape).value()[0];
  };
  auto central = [&](double& v, double h) {
    const double saved = v;
    v = saved + h;
    const double up = eval();
    v = saved - h;
    const double down = eval();
    v = saved;
    return (up - down) / (2.0 * h);
  };

  GradcheckResult r;
  r.op = name;
  double worst_diff = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    T& t = *inputs[k];
    for (ad::Index i : pick_entries(t.numel(), opt.max_entries_per_tensor, rng)) {
      const double fd = central(t.value()[i], opt.step);
      const double fd_half = central(t.value()[i], opt.step / 2);
      if (std::abs(fd - fd_half) > 1e-7 * std::max(1.0, std::abs(fd))) {
        ++r.kinks;
        continue;
      }
      const double a = analytic[k][i];
      worst_diff = std::max(worst_diff, std::abs(a - fd));
      scale = std::max({scale, std::abs(a), std::abs(fd)});
      ++r.checked;
    }
  }
  r.max_rel_error = scale > 0.0 ? worst_diff / scale : worst_diff;
  r.passed = r.checked > 0 && r.max_rel_error <= opt.tolerance;
  return r;
}

void randomize_biases(ModelParams<double>& params, CounterRng& rng) {
  for (T* t : params.parameters()) {
    if (t->shape().n == 1 && t->shape().h == 1 && t->shape().w == 1) {
      for (ad::Index i = 0; i < t->numel(); ++i) t->value()[i] = 0.2 * rng.uniform() - 0.1;
    }
  }
}

GradcheckResult check_model(const std::string& name, const ModelConfig& cfg, ad::Index batch,
                            const GradcheckOptions& opt, CounterRng& rng) {
  ModelParams<double> params = init_model<double>(cfg, opt.seed);
  randomize_biases(params, rng);
  const Shape s{batch, 1, 8, 8};
  T cur = random_tensor(s, rng, 0.0, 1.0);
  T prev = random_tensor(s, rng, 0.0, 1.0);
  T prev2 = random_tensor(s, rng, 0.0, 1.0);
  const T target = random_tensor(s, rng, 0.0, 1.0);
  std::vector<T*> inputs = params.parameters();
  inputs.push_back(&cur);
  inputs.push_back(&prev);
  inputs.push_back(&prev2);
  return check(
      name, [&](Tape& tape) -> T& { return ad::mse_loss(tape, forward(tape, params, cur, prev, prev2), target); },
      inputs, opt, rng);
}

}  // namespace

std::vector<std::string> gradcheck_op_names() {
  return {"conv2d_3x3", "conv2d_1x1", "conv_transpose2d", "maxpool2d",
          "relu",           "concat_channels",  "mse_loss",   "model_tiny",       "model_desk_2stage"};
}

std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions& opt) {
  CounterRng rng(opt.seed, 0x47524144ull);
  std::vector<GradcheckResult> out;

  auto conv = [&](const std::string& name, Shape xs, ad::Index outc, ad::Index k, ad::Index pad) {
    T x = random_tensor(xs, rng, -1.0, 1.0);
    T w = random_tensor({outc, xs.c, k, k}, rng, -0.5, 0.5);
    T b = random_tensor({1, outc, 1, 1}, rng, -0.5, 0.5);
    const ad::Index oh = xs.h + 2 * pad - k + 1;
    const ad::Index ow = xs.w + 2 * pad - k + 1;
    const T target = random_tensor({xs.n, outc, oh, ow}, rng, -1.0, 1.0);
    out.push_back(check(
        name, [&](Tape& t) -> T& { return ad::mse_loss(t, ad::conv2d(t, x, w, b, pad), target); }, {&x, &w, &b}, opt,
        rng));
  };
  conv("conv2d_3x3", {2, 3, 6, 5}, 4, 3, 1);
  conv("conv2d_1x1", {2, 3, 4, 4}, 5, 1, 0);

  {
    T x = random_tensor({2, 4, 3, 3}, rng, -1.0, 1.0);
    T w = random_tensor({4, 3, 2, 2}, rng, -0.5, 0.5);
    T b = random_tensor({1, 3, 1, 1}, rng, -0.5, 0.5);
    const T target = random_tensor({2, 3, 6, 6}, rng, -1.0, 1.0);
    out.push_back(check(
        "conv_transpose2d", [&](Tape& t) -> T& { return ad::mse_loss(t, ad::conv_transpose2d(t, x, w, b), target); },
        {&x, &w, &b}, opt, rng));
  }
  {
    T x = random_tensor({2, 2, 6, 4}, rng, -1.0, 1.0);
    const T target = random_tensor({2, 2, 3, 2}, rng, -1.0, 1.0);
    out.push_back(check(
        "maxpool2d", [&](Tape& t) -> T& { return ad::mse_loss(t, ad::maxpool2d(t, x), target); }, {&x}, opt, rng));
  }
  {
    T x = random_tensor({2, 3, 4, 4}, rng, -1.0, 1.0);
    const T target = random_tensor({2, 3, 4, 4}, rng, -1.0, 1.0);
    out.push_back(
        check("relu", [&](Tape& t) -> T& { return ad::mse_loss(t, ad::relu(t, x), target); }, {&x}, opt, rng));
  }
  {
    T a = random_tensor({2, 2, 3, 3}, rng, -1.0, 1.0);
    T b = random_tensor({2, 1, 3, 3}, rng, -1.0, 1.0);
    T c = random_tensor({2, 3, 3, 3}, rng, -1.0, 1.0);
    const T target = random_tensor({2, 6, 3, 3}, rng, -1.0, 1.0);
    out.push_back(check(
        "concat_channels",
        [&](Tape& t) -> T& { return ad::mse_loss(t, ad::concat_channels(t, {&a, &b, &c}), target); }, {&a, &b, &c},
        opt, rng));
  }
  {
    T p = random_tensor({2, 2, 3, 3}, rng, -1.0, 1.0);
    const T target = random_tensor({2, 2, 3, 3}, rng, -1.0, 1.0);
    out.push_back(check("mse_loss", [&](Tape& t) -> T& { return ad::mse_loss(t, p, target); }, {&p}, opt, rng));
  }

  out.push_back(check_model("model_tiny", ModelConfig::gradcheck_scale(), 2, opt, rng));
  out.push_back(check_model("model_desk_2stage", ModelConfig{8, 128, 2, 1, true}, 1, opt, rng));
  return out;
}

}  // namespace saved
