#pragma once

#include <deque>
#include <functional>
#include <stdexcept>
#include <vector>

#include "saved/autodiff/tensor.hpp"

namespace saved::ad {

/// Reverse-mode record of executed operations.
///
/// Intermediate tensors are owned by the tape and keep stable addresses until
/// `clear()`. Leaf tensors (parameters, inputs) are owned by the caller and
/// must outlive any backward pass. Gradients of tape-owned tensors are reset
/// at the start of every `backward`; gradients of caller-owned tensors
/// accumulate until the caller zeroes them.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;

  /// A non-recording tape runs forward passes only; nothing it produces
  /// requires grad and no closures are kept.
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  TensorT& make(Shape shape, bool requires_grad) {
    nodes_.emplace_back(shape, Scalar(0), requires_grad && recording_);
    return nodes_.back();
  }

  /// Appends a backward closure. Closures run in reverse order of recording.
  void record(std::function<void()> backward) {
    if (recording_) backward_.push_back(std::move(backward));
  }
  bool recording() const { return recording_; }

  bool owns(const TensorT& t) const {
    for (const TensorT& n : nodes_) {
      if (&n == &t) return true;
    }
    return false;
  }

  std::size_t size() const { return backward_.size(); }
  bool empty() const { return backward_.empty(); }

  void clear() {
    backward_.clear();
    nodes_.clear();
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every tensor that requires grad.
  void backward(TensorT& loss) {
    if (backward_.empty()) throw std::logic_error("backward called on an empty tape");
    if (loss.numel() != 1) throw std::invalid_argument("backward needs a scalar loss");
    if (&loss != &nodes_.back() && !owns(loss)) {
      throw std::invalid_argument("loss tensor was not produced on this tape");
    }
    if (!loss.requires_grad()) return;
    for (TensorT& n : nodes_) n.zero_grad();
    loss.grad()[0] = Scalar(1);
    for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
  }

 private:
  std::deque<TensorT> nodes_;
  std::vector<std::function<void()>> backward_;
  bool recording_ = true;
};

template <typename Scalar>
void backward(Tape<Scalar>& tape, Tensor<Scalar>& loss) {
  tape.backward(loss);
}

}  // namespace saved::ad
