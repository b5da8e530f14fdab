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

#include "tabadv/models.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "tabadv/error.hpp"
#include "tabadv/rng.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

constexpr const char* kCheckpointMagic = "tabadv-model";
constexpr int kCheckpointVersion = 1;

diff::Tensor ToTensor(const Matrix& x) {
  const auto values = x.data();
  return diff::Tensor::Matrix(x.rows(), x.cols(),
                              std::vector<double>(values.begin(), values.end()));
}

std::vector<double> ToTargets(std::span<const int> y) {
  return std::vector<double>(y.begin(), y.end());
}

struct AdamState {
  std::vector<diff::Tensor> m;
  std::vector<diff::Tensor> v;
  std::size_t step = 0;
};

}  // namespace

std::string ModelSpec::Name() const {
  return kind == ModelKind::kLogisticRegression ? "lr" : "mlp";
}

ModelSpec ModelSpec::FromName(const std::string& name) {
  if (name == "lr") return LogisticRegression();
  if (name == "mlp") return Mlp();
  throw ConfigError("unknown model '" + name + "' (expected lr or mlp)");
}

void ModelSpec::Validate() const {
  if ((kind == ModelKind::kMlp) == hidden.empty()) {
    throw ContractError("model spec: hidden layers must be non-empty iff MLP");
  }
  for (auto width : hidden) {
    if (width == 0) throw ContractError("model spec: zero-width hidden layer");
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    throw ContractError("model spec: dropout must be in [0, 1)");
  }
}

void TrainConfig::Validate() const {
  if (epochs == 0 || batch_size == 0 || !(learning_rate > 0.0) ||
      !(adam_eps > 0.0) || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 ||
      beta2 >= 1.0) {
    throw ContractError("train config: epochs, batch size, learning rate and "
                        "Adam constants must be positive (betas in [0, 1))");
  }
}

std::vector<int> DifferentiableClassifier::PredictLabels(const Matrix& x) const {
  const auto logits = PredictLogits(x);
  std::vector<int> labels(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) labels[i] = LabelFromLogit(logits[i]);
  return labels;
}

double DifferentiableClassifier::PredictLogit(std::span<const double> x) const {
  return PredictLogits(Matrix(1, x.size(), {x.begin(), x.end()}))[0];
}

int DifferentiableClassifier::PredictLabel(std::span<const double> x) const {
  return LabelFromLogit(PredictLogit(x));
}

LossGradient DifferentiableClassifier::LossAndInputGradient(
    std::span<const double> x, int y) const {
  Matrix grads;
  const int labels[1] = {y};
  const auto losses =
      LossInputGradients(Matrix(1, x.size(), {x.begin(), x.end()}), labels, &grads);
  const auto g = grads.row(0);
  return {losses[0], std::vector<double>(g.begin(), g.end())};
}

std::pair<double, std::vector<double>> DifferentiableClassifier::LogitAndInputGradient(
    std::span<const double> x) const {
  Matrix grads;
  const auto logits =
      LogitInputGradients(Matrix(1, x.size(), {x.begin(), x.end()}), &grads);
  const auto g = grads.row(0);
  return {logits[0], std::vector<double>(g.begin(), g.end())};
}

FeedForwardClassifier::FeedForwardClassifier(ModelSpec spec, std::size_t input_dim,
                                             std::uint64_t init_seed)
    : spec_(std::move(spec)), input_dim_(input_dim) {
  spec_.Validate();
  if (input_dim_ == 0) throw ContractError("model: input dimension is zero");
  std::vector<std::size_t> widths = {input_dim_};
  widths.insert(widths.end(), spec_.hidden.begin(), spec_.hidden.end());
  widths.push_back(1);
  Rng rng(init_seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    diff::Tensor w({fan_in, fan_out});
    for (auto& v : w.data()) v = rng.Uniform(-a, a);
    weights_.push_back(std::move(w));
    biases_.emplace_back(std::vector<std::size_t>{fan_out}, 0.0);
  }
}

void FeedForwardClassifier::CheckInput(const Matrix& x) const {
  if (x.cols() != input_dim_) {
    throw ShapeError("model expects " + std::to_string(input_dim_) +
                     " input columns, got " + std::to_string(x.cols()));
  }
}

diff::Var FeedForwardClassifier::Forward(diff::Tape& tape, diff::Var input,
                                         std::vector<diff::Var>* params,
                                         bool training,
                                         std::uint64_t dropout_seed) const {
  diff::Var h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto w = tape.Leaf(weights_[l]);
    const auto b = tape.Leaf(biases_[l]);
    if (params) {
      params->push_back(w);
      params->push_back(b);
    }
    h = tape.Affine(h, w, b);
    if (l + 1 < weights_.size()) {
      h = tape.Relu(h);
      if (training && spec_.dropout_p > 0.0) {
        h = tape.Dropout(h, spec_.dropout_p, Rng::SplitMix64(dropout_seed + l));
      }
    }
  }
  return h;
}

std::vector<double> FeedForwardClassifier::PredictLogits(const Matrix& x) const {
  CheckInput(x);
  // Plain forward pass; no tape needed at inference time.
  std::vector<double> cur(x.data().begin(), x.data().end());
  std::size_t width = input_dim_;
  const std::size_t n = x.rows();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    const auto& b = biases_[l];
    const std::size_t out = w.cols();
    std::vector<double> next(n * out);
    for (std::size_t r = 0; r < n; ++r) {
      double* yr = next.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = b[o];
      for (std::size_t k = 0; k < width; ++k) {
        const double xk = cur[r * width + k];
        if (xk == 0.0) continue;
        const double* wk = &w.data()[k * out];
        for (std::size_t o = 0; o < out; ++o) yr[o] += xk * wk[o];
      }
      if (l + 1 < weights_.size()) {
        for (std::size_t o = 0; o < out; ++o) yr[o] = yr[o] > 0.0 ? yr[o] : 0.0;
      }
    }
    cur = std::move(next);
    width = out;
  }
  return cur;
}

std::vector<double> FeedForwardClassifier::LossInputGradients(
    const Matrix& x, std::span<const int> y, Matrix* grads) const {
  CheckInput(x);
  if (y.size() != x.rows()) {
    throw ShapeError("loss gradients: " + std::to_string(y.size()) +
                     " labels for " + std::to_string(x.rows()) + " rows");
  }
  diff::Tape tape;
  const auto input = tape.Leaf(ToTensor(x));
  const auto logits = Forward(tape, input, nullptr, false, 0);
  const auto targets = ToTargets(y);
  // Summed loss: rows are independent, so each row's gradient is the
  // gradient of that row's own loss.
  const auto loss = tape.BceWithLogits(logits, targets, diff::Reduction::kSum);
  const auto g = tape.Backward(loss);
  if (grads) {
    const auto values = g.Wrt(input).data();
    *grads = Matrix(x.rows(), x.cols(), {values.begin(), values.end()});
  }
  std::vector<double> losses(x.rows());
  const auto& z = tape.Value(logits);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    losses[i] = std::max(z[i], 0.0) - z[i] * targets[i] +
                std::log1p(std::exp(-std::abs(z[i])));
  }
  return losses;
}

std::vector<double> FeedForwardClassifier::LogitInputGradients(const Matrix& x,
                                                               Matrix* grads) const {
  CheckInput(x);
  diff::Tape tape;
  const auto input = tape.Leaf(ToTensor(x));
  const auto logits = Forward(tape, input, nullptr, false, 0);
  const auto total = tape.Sum(logits);
  const auto g = tape.Backward(total);
  if (grads) {
    const auto values = g.Wrt(input).data();
    *grads = Matrix(x.rows(), x.cols(), {values.begin(), values.end()});
  }
  const auto z = tape.Value(logits).data();
  return {z.begin(), z.end()};
}

std::vector<diff::Tensor*> FeedForwardClassifier::Parameters() {
  std::vector<diff::Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const diff::Tensor*> FeedForwardClassifier::Parameters() const {
  std::vector<const diff::Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::size_t FeedForwardClassifier::ParameterCount() const {
  std::size_t n = 0;
  for (const auto* p : Parameters()) n += p->size();
  return n;
}

double FeedForwardClassifier::LossAndParameterGradients(
    const Matrix& x, std::span<const int> y, bool training,
    std::uint64_t dropout_seed, std::vector<diff::Tensor>* grads) const {
  CheckInput(x);
  if (y.size() != x.rows()) throw ShapeError("parameter gradients: label count");
  diff::Tape tape;
  const auto input = tape.Leaf(ToTensor(x));
  std::vector<diff::Var> params;
  const auto logits = Forward(tape, input, &params, training, dropout_seed);
  const auto targets = ToTargets(y);
  const auto loss = tape.BceWithLogits(logits, targets, diff::Reduction::kMean);
  if (grads) {
    const auto g = tape.Backward(loss);
    grads->clear();
    for (const auto p : params) grads->push_back(g.Wrt(p));
  }
  return tape.Value(loss).item();
}

void FeedForwardClassifier::Save(std::ostream& out) const {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "kind " << spec_.Name() << '\n';
  out << "hidden";
  for (auto h : spec_.hidden) out << ' ' << h;
  out << '\n';
  out << "dropout " << internal::FormatDouble(spec_.dropout_p) << '\n';
  out << "input_dim " << input_dim_ << '\n';
  out << "layers " << weights_.size() << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t r = 0; r < w.rows(); ++r) {
      for (std::size_t c = 0; c < w.cols(); ++c) {
        out << (c ? " " : "") << internal::FormatDouble(w.at(r, c));
      }
      out << '\n';
    }
    out << "bias " << l << ' ' << biases_[l].size() << '\n';
    for (std::size_t c = 0; c < biases_[l].size(); ++c) {
      out << (c ? " " : "") << internal::FormatDouble(biases_[l][c]);
    }
    out << '\n';
  }
}

void FeedForwardClassifier::Save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  Save(out);
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

FeedForwardClassifier FeedForwardClassifier::Load(std::istream& in) {
  const auto fail = [](const std::string& what) -> IoError {
    return IoError("checkpoint: " + what);
  };
  std::string line;
  const auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw fail("unexpected end of file");
    return std::istringstream(line);
  };
  const auto expect = [&](std::istringstream& s, const std::string& key) {
    std::string word;
    s >> word;
    if (word != key) throw fail("expected '" + key + "', found '" + word + "'");
  };
  const auto read_number = [&](std::istringstream& s) {
    std::string token;
    if (!(s >> token)) throw fail("missing value");
    const auto v = internal::ParseDouble(token);
    if (!v) throw fail("malformed number '" + token + "'");
    return *v;
  };

  auto header = next_line();
  expect(header, kCheckpointMagic);
  int version = 0;
  header >> version;
  if (version != kCheckpointVersion) throw fail("unsupported version");

  auto kind_line = next_line();
  expect(kind_line, "kind");
  std::string kind;
  kind_line >> kind;
  ModelSpec spec = ModelSpec::FromName(kind);
  auto hidden_line = next_line();
  expect(hidden_line, "hidden");
  spec.hidden.clear();
  for (std::size_t h; hidden_line >> h;) spec.hidden.push_back(h);
  auto dropout_line = next_line();
  expect(dropout_line, "dropout");
  spec.dropout_p = read_number(dropout_line);
  auto dim_line = next_line();
  expect(dim_line, "input_dim");
  std::size_t input_dim = 0;
  dim_line >> input_dim;

  FeedForwardClassifier model(spec, input_dim, 0);
  auto layers_line = next_line();
  expect(layers_line, "layers");
  std::size_t layers = 0;
  layers_line >> layers;
  if (layers != model.weights_.size()) throw fail("layer count mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    auto wl = next_line();
    expect(wl, "weight");
    std::size_t idx = 0, rows = 0, cols = 0;
    wl >> idx >> rows >> cols;
    auto& w = model.weights_[l];
    if (idx != l || rows != w.rows() || cols != w.cols()) throw fail("weight shape");
    for (std::size_t r = 0; r < rows; ++r) {
      auto values = next_line();
      for (std::size_t c = 0; c < cols; ++c) w.at(r, c) = read_number(values);
    }
    auto bl = next_line();
    expect(bl, "bias");
    std::size_t bidx = 0, width = 0;
    bl >> bidx >> width;
    auto& b = model.biases_[l];
    if (bidx != l || width != b.size()) throw fail("bias shape");
    auto values = next_line();
    for (std::size_t c = 0; c < width; ++c) b[c] = read_number(values);
  }
  return model;
}

FeedForwardClassifier FeedForwardClassifier::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return Load(in);
}

double Accuracy(const DifferentiableClassifier& model, const Matrix& x,
                std::span<const int> y) {
  if (x.rows() == 0) throw ContractError("accuracy: empty input");
  if (y.size() != x.rows()) throw ShapeError("accuracy: label count mismatch");
  const auto predicted = model.PredictLabels(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ContractError("accuracy: labels must be binary");
    correct += predicted[i] == y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

FeedForwardClassifier Train(const EncodedDataset& ds, const ModelSpec& spec,
                            const TrainConfig& cfg) {
  if (ds.split.train.empty()) throw ContractError("train: dataset has no training split");
  const Matrix x = ds.Rows(ds.split.train);
  const auto y = ds.Labels(ds.split.train);
  const Matrix val_x = ds.Rows(ds.split.val);
  const auto val_y = ds.Labels(ds.split.val);
  return Train(x, y, spec, cfg, ds.split.val.empty() ? nullptr : &val_x, val_y);
}

FeedForwardClassifier Train(const Matrix& x, std::span<const int> y,
                            const ModelSpec& spec, const TrainConfig& cfg,
                            const Matrix* val_x, std::span<const int> val_y) {
  cfg.Validate();
  if (x.rows() == 0 || y.size() != x.rows()) {
    throw ContractError("train: need a non-empty matrix with one label per row");
  }
  FeedForwardClassifier model(spec, x.cols(), cfg.seed);
  auto params = model.Parameters();
  AdamState adam;
  for (const auto* p : params) {
    adam.m.emplace_back(p->shape());
    adam.v.emplace_back(p->shape());
  }

  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(Rng::SplitMix64(cfg.seed ^ 0x5348554646ULL));
  std::vector<diff::Tensor> grads;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.Shuffle(order.begin(), order.end());
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const Matrix bx = x.SelectRows(batch);
      std::vector<int> by;
      by.reserve(batch.size());
      for (auto i : batch) by.push_back(y[i]);

      const std::uint64_t dropout_seed =
          Rng::SplitMix64(cfg.seed + 0x9E37ULL * (adam.step + 1));
      const double loss =
          model.LossAndParameterGradients(bx, by, true, dropout_seed, &grads);
      if (!std::isfinite(loss)) {
        throw TrainingError("train: non-finite loss in epoch " + std::to_string(epoch));
      }
      weighted_loss += loss * static_cast<double>(batch.size());

      ++adam.step;
      const double t = static_cast<double>(adam.step);
      const double bias1 = 1.0 - std::pow(cfg.beta1, t);
      const double bias2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto theta = params[p]->data();
        auto m = adam.m[p].data();
        auto v = adam.v[p].data();
        const auto g = grads[p].data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
          m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
          v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
          theta[i] -= cfg.learning_rate * (m[i] / bias1) /
                      (std::sqrt(v[i] / bias2) + cfg.adam_eps);
        }
      }
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = weighted_loss / static_cast<double>(x.rows());
    entry.train_accuracy = Accuracy(model, x, y);
    entry.val_accuracy = (val_x && val_x->rows() > 0)
                             ? Accuracy(model, *val_x, val_y)
                             : std::numeric_limits<double>::quiet_NaN();
    model.mutable_training_log().push_back(entry);
  }
  for (const auto* p : model.Parameters()) {
    if (!p->AllFinite()) throw TrainingError("train: parameters became non-finite");
  }
  return model;
}

}  // namespace tabadv
