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

#ifndef TABADV_MODELS_HPP_
#define TABADV_MODELS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabadv/diffcore.hpp"
#include "tabadv/matrix.hpp"
#include "tabadv/schema_data.hpp"

namespace tabadv {

enum class ModelKind { kLogisticRegression, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::vector<std::size_t> hidden;  // non-empty iff kind == kMlp
  double dropout_p = 0.0;

  static ModelSpec LogisticRegression() { return {}; }
  static ModelSpec Mlp() { return {ModelKind::kMlp, {64, 32}, 0.2}; }

  // "lr" or "mlp".
  std::string Name() const;
  static ModelSpec FromName(const std::string& name);
  void Validate() const;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 42;

  // 20 epochs, batch 512, learning rate 1e-3: the published protocol, which
  // on datasets smaller than one batch performs only 20 optimizer steps.
  static TrainConfig PublishedProtocol() {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 512;
    cfg.learning_rate = 1e-3;
    return cfg;
  }
  void Validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;  // NaN when the dataset has no validation rows
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d x
};

// Binary classifier with a single logit z: predicts class 1 iff z > 0. The
// two-class logit vector used by margin losses is (0, z), i.e. class 0 has a
// constant zero logit.
class DifferentiableClassifier {
 public:
  virtual ~DifferentiableClassifier() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::vector<double> PredictLogits(const Matrix& x) const = 0;
  // Per-row cross-entropy losses and their input gradients.
  virtual std::vector<double> LossInputGradients(const Matrix& x,
                                                 std::span<const int> y,
                                                 Matrix* grads) const = 0;
  // Per-row logits and their input gradients.
  virtual std::vector<double> LogitInputGradients(const Matrix& x,
                                                  Matrix* grads) const = 0;

  std::vector<int> PredictLabels(const Matrix& x) const;
  int PredictLabel(std::span<const double> x) const;
  double PredictLogit(std::span<const double> x) const;
  LossGradient LossAndInputGradient(std::span<const double> x, int y) const;
  std::pair<double, std::vector<double>> LogitAndInputGradient(
      std::span<const double> x) const;
};

inline int LabelFromLogit(double z) { return z > 0.0 ? 1 : 0; }

// Logistic regression (no hidden layers) or ReLU MLP with dropout after each
// hidden activation. Layer l maps width[l] -> width[l+1] with W_l stored
// in x out.
class FeedForwardClassifier final : public DifferentiableClassifier {
 public:
  FeedForwardClassifier(ModelSpec spec, std::size_t input_dim,
                        std::uint64_t init_seed);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t num_layers() const noexcept { return weights_.size(); }

  std::vector<double> PredictLogits(const Matrix& x) const override;
  std::vector<double> LossInputGradients(const Matrix& x, std::span<const int> y,
                                         Matrix* grads) const override;
  std::vector<double> LogitInputGradients(const Matrix& x,
                                          Matrix* grads) const override;

  // Flat parameter view: W_0, b_0, W_1, b_1, ...
  std::vector<diff::Tensor*> Parameters();
  std::vector<const diff::Tensor*> Parameters() const;
  std::size_t ParameterCount() const;

  // Mean BCE over the batch and its gradient for every parameter (same
  // order as Parameters()). `dropout_seed` is ignored unless `training`.
  double LossAndParameterGradients(const Matrix& x, std::span<const int> y,
                                   bool training, std::uint64_t dropout_seed,
                                   std::vector<diff::Tensor>* grads) const;

  const std::vector<EpochLog>& training_log() const noexcept { return log_; }
  std::vector<EpochLog>& mutable_training_log() noexcept { return log_; }

  // Text checkpoint: header with spec and dimensions, then every parameter
  // in shortest round-trip decimal form. Equal parameters give equal bytes.
  void Save(std::ostream& out) const;
  void Save(const std::filesystem::path& path) const;
  static FeedForwardClassifier Load(std::istream& in);
  static FeedForwardClassifier Load(const std::filesystem::path& path);

  friend bool operator==(const FeedForwardClassifier& a,
                         const FeedForwardClassifier& b) {
    return a.spec_.kind == b.spec_.kind && a.spec_.hidden == b.spec_.hidden &&
           a.input_dim_ == b.input_dim_ && a.weights_ == b.weights_ &&
           a.biases_ == b.biases_;
  }

 private:
  // Records the forward pass; returns the logit node (n x 1).
  diff::Var Forward(diff::Tape& tape, diff::Var input,
                    std::vector<diff::Var>* params, bool training,
                    std::uint64_t dropout_seed) const;
  void CheckInput(const Matrix& x) const;

  ModelSpec spec_;
  std::size_t input_dim_;
  std::vector<diff::Tensor> weights_;
  std::vector<diff::Tensor> biases_;
  std::vector<EpochLog> log_;
};

// Mini-batch Adam on mean BCE over the training split. Shuffle order and
// dropout masks derive from cfg.seed only. Throws TrainingError if the loss
// becomes non-finite.
FeedForwardClassifier Train(const EncodedDataset& ds, const ModelSpec& spec,
                            const TrainConfig& cfg);
FeedForwardClassifier Train(const Matrix& x, std::span<const int> y,
                            const ModelSpec& spec, const TrainConfig& cfg,
                            const Matrix* val_x = nullptr,
                            std::span<const int> val_y = {});

// Fraction of rows whose predicted label equals y.
double Accuracy(const DifferentiableClassifier& model, const Matrix& x,
                std::span<const int> y);

}  // namespace tabadv

#endif  // TABADV_MODELS_HPP_
