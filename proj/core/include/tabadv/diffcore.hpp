// Copyright 2026 The tabadv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal tape-based reverse-mode differentiation over dense rank-0/1/2
// tensors. Enough to train logistic regression and MLPs and to take
// gradients of a loss or a logit with respect to the model input.
//
//   diff::Tape tape;
//   auto x = tape.Leaf(diff::Tensor::Matrix(1, 2, {0.5, 0.5}));
//   auto w = tape.Leaf(diff::Tensor::Matrix(2, 1, {1.0, -2.0}));
//   auto b = tape.Leaf(diff::Tensor::Vector({0.0}));
//   auto loss = tape.BceWithLogits(tape.Affine(x, w, b), {1.0});
//   auto grads = tape.Backward(loss);
//   grads.Wrt(x);  // (-0.6225, 1.2450)

#ifndef TABADV_DIFFCORE_HPP_
#define TABADV_DIFFCORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace tabadv::diff {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor({}, {value}); }
  static Tensor Vector(std::vector<double> data) {
    const auto n = data.size();
    return Tensor({n}, std::move(data));
  }
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  // Rank-2 views; a vector is treated as a single row.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  // Value of a single-element tensor.
  double item() const;
  bool AllFinite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Handle to a value recorded on a tape.
struct Var {
  std::size_t index = 0;
};

enum class Reduction { kMean, kSum };

class Gradients {
 public:
  // Gradient of the loss with respect to `v`; zeros when `v` does not
  // influence the loss.
  const Tensor& Wrt(Var v) const { return grads_.at(v.index); }

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
};

class Tape {
 public:
  Var Leaf(Tensor value);
  const Tensor& Value(Var v) const { return nodes_.at(v.index).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // x: n x in (or length in), w: in x out, b: length out. Returns n x out.
  Var Affine(Var x, Var w, Var b);
  // Subgradient at 0 is 0.
  Var Relu(Var x);
  Var Sigmoid(Var x);
  // Inverted dropout: zeroes each entry with probability p and scales the
  // survivors by 1/(1-p). The mask is drawn from `seed`.
  Var Dropout(Var x, double p, std::uint64_t seed);
  // Stable binary cross-entropy on logits:
  //   max(z, 0) - z*y + log(1 + exp(-|z|)).
  Var BceWithLogits(Var z, std::span<const double> targets,
                    Reduction reduction = Reduction::kMean);
  Var BceWithLogits(Var z, std::initializer_list<double> targets,
                    Reduction reduction = Reduction::kMean) {
    return BceWithLogits(z, std::span<const double>(targets.begin(), targets.size()),
                         reduction);
  }
  Var Add(Var a, Var b);
  Var Scale(Var a, double factor);
  Var Sum(Var a);

  // Reverse sweep from a scalar node. Does not modify the tape, so repeated
  // calls return identical gradients.
  Gradients Backward(Var loss) const;

 private:
  enum class Op { kLeaf, kAffine, kRelu, kSigmoid, kDropout, kBce, kAdd, kScale, kSum };
  struct Node {
    Op op = Op::kLeaf;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor aux;  // dropout mask or BCE targets
    double factor = 1.0;
  };
  Var Push(Node node);
  const Node& At(Var v) const;

  std::vector<Node> nodes_;
};

double Sigmoid(double z);

// Max over coordinates of |analytic_i - central_i| / max(1, |central_i|),
// where central_i = (f(x + h e_i) - f(x - h e_i)) / 2h.
double FiniteDiffCheck(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x,
                       std::span<const double> analytic, double h = 1e-5);

// Central-difference gradient of f at x.
std::vector<double> CentralDifferences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h = 1e-5);

}  // namespace tabadv::diff

#endif  // TABADV_DIFFCORE_HPP_
