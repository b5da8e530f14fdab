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

#include "tabadv/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "tabadv/error.hpp"
#include "tabadv/rng.hpp"

namespace tabadv::diff {
namespace {

std::size_t Product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void Accumulate(Tensor& into, const Tensor& delta) {
  auto dst = into.data();
  const auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != Product(shape_)) {
    throw ShapeError("tensor: " + std::to_string(data_.size()) +
                     " values for shape " + ShapeString(shape_));
  }
}

std::size_t Tensor::rows() const noexcept {
  return shape_.size() == 2 ? shape_[0] : 1;
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.size() == 2) return shape_[1];
  return shape_.empty() ? 1 : shape_[0];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractError("tensor: item() on shape " + ShapeString(shape_));
  }
  return data_[0];
}

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Var Tape::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::At(Var v) const {
  if (v.index >= nodes_.size()) throw ContractError("tape: unknown variable");
  return nodes_[v.index];
}

Var Tape::Leaf(Tensor value) {
  Node node;
  node.value = std::move(value);
  return Push(std::move(node));
}

Var Tape::Affine(Var x, Var w, Var b) {
  const Tensor& xv = At(x).value;
  const Tensor& wv = At(w).value;
  const Tensor& bv = At(b).value;
  if (wv.rank() != 2 || xv.rank() == 0 || xv.rank() > 2 ||
      xv.cols() != wv.rows() || bv.size() != wv.cols()) {
    throw ShapeError("affine: x " + ShapeString(xv.shape()) + ", W " +
                     ShapeString(wv.shape()) + ", b " + ShapeString(bv.shape()));
  }
  const std::size_t n = xv.rows();
  const std::size_t in = wv.rows();
  const std::size_t out = wv.cols();
  Tensor y({n, out});
  for (std::size_t r = 0; r < n; ++r) {
    double* yr = &y.at(r, 0);
    for (std::size_t o = 0; o < out; ++o) yr[o] = bv[o];
    for (std::size_t k = 0; k < in; ++k) {
      const double xk = xv.at(r, k);
      if (xk == 0.0) continue;
      const double* wk = wv.data().data() + k * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xk * wk[o];
    }
  }
  Node node;
  node.op = Op::kAffine;
  node.inputs = {x.index, w.index, b.index};
  node.value = std::move(y);
  return Push(std::move(node));
}

Var Tape::Relu(Var x) {
  Tensor y = At(x).value;
  for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
  Node node;
  node.op = Op::kRelu;
  node.inputs = {x.index};
  node.value = std::move(y);
  return Push(std::move(node));
}

Var Tape::Sigmoid(Var x) {
  Tensor y = At(x).value;
  for (auto& v : y.data()) v = diff::Sigmoid(v);
  Node node;
  node.op = Op::kSigmoid;
  node.inputs = {x.index};
  node.value = std::move(y);
  return Push(std::move(node));
}

Var Tape::Dropout(Var x, double p, std::uint64_t seed) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: probability must be in [0, 1)");
  }
  const Tensor& xv = At(x).value;
  Tensor mask(xv.shape());
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  for (auto& m : mask.data()) m = rng.Uniform() < p ? 0.0 : keep_scale;
  Tensor y = xv;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  Node node;
  node.op = Op::kDropout;
  node.inputs = {x.index};
  node.value = std::move(y);
  node.aux = std::move(mask);
  return Push(std::move(node));
}

Var Tape::BceWithLogits(Var z, std::span<const double> targets,
                        Reduction reduction) {
  const Tensor& zv = At(z).value;
  if (zv.size() != targets.size() || zv.size() == 0) {
    throw ShapeError("bce_with_logits: " + std::to_string(zv.size()) +
                     " logits vs " + std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const double v = zv[i];
    total += std::max(v, 0.0) - v * targets[i] + std::log1p(std::exp(-std::abs(v)));
  }
  const double factor =
      reduction == Reduction::kMean ? 1.0 / static_cast<double>(zv.size()) : 1.0;
  Node node;
  node.op = Op::kBce;
  node.inputs = {z.index};
  node.value = Tensor::Scalar(total * factor);
  node.aux = Tensor({targets.size()}, std::vector<double>(targets.begin(), targets.end()));
  node.factor = factor;
  return Push(std::move(node));
}

Var Tape::Add(Var a, Var b) {
  const Tensor& av = At(a).value;
  const Tensor& bv = At(b).value;
  if (av.shape() != bv.shape()) {
    throw ShapeError("add: " + ShapeString(av.shape()) + " vs " +
                     ShapeString(bv.shape()));
  }
  Tensor y = av;
  Accumulate(y, bv);
  Node node;
  node.op = Op::kAdd;
  node.inputs = {a.index, b.index};
  node.value = std::move(y);
  return Push(std::move(node));
}

Var Tape::Scale(Var a, double factor) {
  Tensor y = At(a).value;
  for (auto& v : y.data()) v *= factor;
  Node node;
  node.op = Op::kScale;
  node.inputs = {a.index};
  node.value = std::move(y);
  node.factor = factor;
  return Push(std::move(node));
}

Var Tape::Sum(Var a) {
  const auto values = At(a).value.data();
  Node node;
  node.op = Op::kSum;
  node.inputs = {a.index};
  node.value = Tensor::Scalar(std::accumulate(values.begin(), values.end(), 0.0));
  return Push(std::move(node));
}

Gradients Tape::Backward(Var loss) const {
  if (At(loss).value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        ShapeString(At(loss).value.shape()));
  }
  Gradients out;
  out.grads_.reserve(nodes_.size());
  for (const auto& node : nodes_) out.grads_.emplace_back(node.value.shape());
  std::vector<bool> reached(nodes_.size(), false);
  out.grads_[loss.index][0] = 1.0;
  reached[loss.index] = true;

  // Nodes are appended after their inputs, so reverse index order is a
  // reverse topological order.
  for (std::size_t idx = loss.index + 1; idx-- > 0;) {
    if (!reached[idx]) continue;
    const Node& node = nodes_[idx];
    const Tensor& g = out.grads_[idx];
    for (auto in : node.inputs) reached[in] = true;
    switch (node.op) {
      case Op::kLeaf:
        break;
      case Op::kAffine: {
        const Tensor& xv = nodes_[node.inputs[0]].value;
        const Tensor& wv = nodes_[node.inputs[1]].value;
        Tensor& gx = out.grads_[node.inputs[0]];
        Tensor& gw = out.grads_[node.inputs[1]];
        Tensor& gb = out.grads_[node.inputs[2]];
        const std::size_t n = xv.rows();
        const std::size_t in = wv.rows();
        const std::size_t outw = wv.cols();
        for (std::size_t r = 0; r < n; ++r) {
          const double* gr = &g.data()[r * outw];
          for (std::size_t o = 0; o < outw; ++o) gb[o] += gr[o];
          for (std::size_t k = 0; k < in; ++k) {
            const double* wk = &wv.data()[k * outw];
            double* gwk = &gw.data()[k * outw];
            const double xk = xv.data()[r * in + k];
            double acc = 0.0;
            for (std::size_t o = 0; o < outw; ++o) {
              acc += gr[o] * wk[o];
              gwk[o] += xk * gr[o];
            }
            gx.data()[r * in + k] += acc;
          }
        }
        break;
      }
      case Op::kRelu: {
        Tensor& gx = out.grads_[node.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (node.value[i] > 0.0) gx[i] += g[i];
        }
        break;
      }
      case Op::kSigmoid: {
        Tensor& gx = out.grads_[node.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = node.value[i];
          gx[i] += g[i] * s * (1.0 - s);
        }
        break;
      }
      case Op::kDropout: {
        Tensor& gx = out.grads_[node.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * node.aux[i];
        break;
      }
      case Op::kBce: {
        const Tensor& zv = nodes_[node.inputs[0]].value;
        Tensor& gz = out.grads_[node.inputs[0]];
        const double scale = g[0] * node.factor;
        for (std::size_t i = 0; i < zv.size(); ++i) {
          gz[i] += scale * (diff::Sigmoid(zv[i]) - node.aux[i]);
        }
        break;
      }
      case Op::kAdd:
        Accumulate(out.grads_[node.inputs[0]], g);
        Accumulate(out.grads_[node.inputs[1]], g);
        break;
      case Op::kScale: {
        Tensor& gx = out.grads_[node.inputs[0]];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * node.factor;
        break;
      }
      case Op::kSum: {
        Tensor& gx = out.grads_[node.inputs[0]];
        for (auto& v : gx.data()) v += g[0];
        break;
      }
    }
  }
  return out;
}

std::vector<double> CentralDifferences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = point[i];
    point[i] = orig + h;
    const double up = f(point);
    point[i] = orig - h;
    const double down = f(point);
    point[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double FiniteDiffCheck(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x,
                       std::span<const double> analytic, double h) {
  if (analytic.size() != x.size()) {
    throw ShapeError("finite_diff_check: gradient length mismatch");
  }
  const auto central = CentralDifferences(f, x, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double err =
        std::abs(analytic[i] - central[i]) / std::max(1.0, std::abs(central[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace tabadv::diff
