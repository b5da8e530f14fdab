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

#include "tabadv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "tabadv/error.hpp"
#include "tabadv/rng.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

constexpr double kCwUpperInit = 1e10;
constexpr double kTanhLimit = 1.0 - 1e-6;

AdversarialBatch MakeBatch(const EligibleSet& set, const AttackSpec& spec,
                           const Matrix& x_adv, std::size_t iterations) {
  AdversarialBatch batch;
  batch.attack = spec;
  batch.examples.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto& ex = batch.examples[i];
    ex.instance_id = set.ids[i];
    ex.label = set.y[i];
    const auto x = set.x.row(i);
    const auto xa = x_adv.row(i);
    ex.x.assign(x.begin(), x.end());
    ex.x_adv.assign(xa.begin(), xa.end());
    ex.iterations_used = iterations;
  }
  return batch;
}

// Recomputes every delta and success flag from x_adv.
void Finalize(const DifferentiableClassifier& model, AdversarialBatch& batch) {
  if (batch.examples.empty()) return;
  const std::size_t d = batch.examples.front().x.size();
  Matrix x_adv(batch.examples.size(), d);
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    auto& ex = batch.examples[i];
    std::copy(ex.x_adv.begin(), ex.x_adv.end(), x_adv.row(i).begin());
    ex.delta.resize(d);
    for (std::size_t j = 0; j < d; ++j) ex.delta[j] = ex.x_adv[j] - ex.x[j];
  }
  const auto labels = model.PredictLabels(x_adv);
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    batch.examples[i].success = labels[i] != batch.examples[i].label;
  }
}

// Signed-gradient ascent on the loss with projection after every step.
Matrix IterateSignedSteps(const DifferentiableClassifier& model,
                          const EligibleSet& set, Matrix current, double step,
                          std::size_t steps, double epsilon) {
  Matrix grads;
  for (std::size_t t = 0; t < steps; ++t) {
    model.LossInputGradients(current, set.y, &grads);
    for (std::size_t i = 0; i < set.size(); ++i) {
      auto row = current.row(i);
      const auto g = grads.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += step * Sign(g[j]);
      ClipBoxAndBall(row, set.x.row(i), epsilon);
    }
  }
  return current;
}

void ClampUnit(std::span<double> x) {
  for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

std::string AttackName(AttackMethod method) {
  switch (method) {
    case AttackMethod::kGaussian: return "gaussian";
    case AttackMethod::kFgsm: return "fgsm";
    case AttackMethod::kBim: return "bim";
    case AttackMethod::kPgd: return "pgd";
    case AttackMethod::kDeepFool: return "deepfool";
    case AttackMethod::kCw: return "cw";
  }
  return "unknown";
}

AttackMethod AttackFromName(const std::string& name) {
  for (const auto m : AllAttacks()) {
    if (AttackName(m) == name) return m;
  }
  throw ConfigError("unknown attack '" + name +
                    "' (expected gaussian, fgsm, bim, pgd, deepfool or cw)");
}

bool IsBounded(AttackMethod method) {
  return method != AttackMethod::kDeepFool && method != AttackMethod::kCw;
}

std::vector<AttackMethod> AllAttacks() {
  return {AttackMethod::kGaussian, AttackMethod::kFgsm,     AttackMethod::kBim,
          AttackMethod::kPgd,      AttackMethod::kDeepFool, AttackMethod::kCw};
}

void AttackSpec::Validate() const {
  if (!(epsilon > 0.0)) throw ContractError("attack spec: epsilon must be > 0");
  if (steps == 0) throw ContractError("attack spec: steps must be >= 1");
  if (step_size && !(*step_size > 0.0)) {
    throw ContractError("attack spec: step size must be > 0");
  }
  if (overshoot < 0.0 || max_iter_deepfool == 0) {
    throw ContractError("attack spec: invalid DeepFool settings");
  }
  if (binary_search_steps == 0 || !(c_init > 0.0) || !(c_growth > 1.0) || kappa < 0.0 ||
      cw_inner_iters == 0 || !(cw_inner_lr > 0.0)) {
    throw ContractError("attack spec: invalid C&W settings");
  }
  if (noise_sigma_scale < 0.0) throw ContractError("attack spec: negative noise scale");
}

AttackSpec AttackSpec::BimSmallStep(double epsilon) {
  AttackSpec spec;
  spec.method = AttackMethod::kBim;
  spec.epsilon = epsilon;
  spec.steps = 20;
  spec.step_size = 0.05;
  return spec;
}

EligibleSet SelectEligible(const DifferentiableClassifier& model, const Matrix& x,
                           std::span<const int> y,
                           std::span<const std::size_t> ids) {
  if (y.size() != x.rows() || ids.size() != x.rows()) {
    throw ShapeError("select_eligible: rows, labels and ids differ in length");
  }
  const auto predicted = model.PredictLabels(x);
  std::vector<std::size_t> keep;
  EligibleSet set;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == y[i]) {
      keep.push_back(i);
      set.y.push_back(y[i]);
      set.ids.push_back(ids[i]);
    }
  }
  set.x = x.SelectRows(keep);
  return set;
}

void ClipBoxAndBall(std::span<double> x, std::span<const double> x_ref,
                    double epsilon) {
  if (x.size() != x_ref.size()) throw ShapeError("clip_box_and_ball: length mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double lo = std::max(0.0, x_ref[j] - epsilon);
    const double hi = std::min(1.0, x_ref[j] + epsilon);
    x[j] = std::clamp(x[j], lo, hi);
  }
}

std::vector<double> ClippedToBoxAndBall(std::span<const double> x,
                                        std::span<const double> x_ref, double epsilon) {
  std::vector<double> out(x.begin(), x.end());
  ClipBoxAndBall(out, x_ref, epsilon);
  return out;
}

AdversarialBatch AttackGaussian(const DifferentiableClassifier& model,
                                const EligibleSet& set, const AttackSpec& spec) {
  spec.Validate();
  const double sigma = spec.NoiseSigma();
  Matrix x_adv = set.x;
  for (std::size_t i = 0; i < set.size(); ++i) {
    Rng rng = Rng::ForStream(spec.seed, set.ids[i]);
    auto row = x_adv.row(i);
    for (auto& v : row) {
      const double noise =
          std::clamp(sigma * rng.Normal(), -spec.epsilon, spec.epsilon);
      v += noise;
    }
    ClipBoxAndBall(row, set.x.row(i), spec.epsilon);
  }
  auto batch = MakeBatch(set, spec, x_adv, 1);
  Finalize(model, batch);
  return batch;
}

AdversarialBatch AttackFgsm(const DifferentiableClassifier& model,
                            const EligibleSet& set, const AttackSpec& spec) {
  spec.Validate();
  Matrix x_adv = IterateSignedSteps(model, set, set.x, spec.epsilon, 1, spec.epsilon);
  auto batch = MakeBatch(set, spec, x_adv, 1);
  Finalize(model, batch);
  return batch;
}

AdversarialBatch AttackBim(const DifferentiableClassifier& model,
                           const EligibleSet& set, const AttackSpec& spec) {
  spec.Validate();
  Matrix x_adv = IterateSignedSteps(model, set, set.x, spec.EffectiveStepSize(),
                                    spec.steps, spec.epsilon);
  auto batch = MakeBatch(set, spec, x_adv, spec.steps);
  Finalize(model, batch);
  return batch;
}

AdversarialBatch AttackPgd(const DifferentiableClassifier& model,
                           const EligibleSet& set, const AttackSpec& spec) {
  spec.Validate();
  Matrix start = set.x;
  if (spec.random_start) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      Rng rng = Rng::ForStream(spec.seed, set.ids[i]);
      auto row = start.row(i);
      for (auto& v : row) v += rng.Uniform(-spec.epsilon, spec.epsilon);
      ClipBoxAndBall(row, set.x.row(i), spec.epsilon);
    }
  }
  Matrix x_adv = IterateSignedSteps(model, set, std::move(start),
                                    spec.EffectiveStepSize(), spec.steps, spec.epsilon);
  auto batch = MakeBatch(set, spec, x_adv, spec.steps);
  Finalize(model, batch);
  return batch;
}

DeepFoolTrace DeepFoolSingle(const DifferentiableClassifier& model,
                             std::span<const double> x, int label,
                             const AttackSpec& spec) {
  DeepFoolTrace trace;
  trace.r_total.assign(x.size(), 0.0);
  trace.x_adv.assign(x.begin(), x.end());
  for (;;) {
    const auto [f, w] = model.LogitAndInputGradient(trace.x_adv);
    if (LabelFromLogit(f) != label) {
      trace.converged = true;
      break;
    }
    if (trace.iterations >= spec.max_iter_deepfool) break;
    double norm2 = 0.0;
    for (const double v : w) norm2 += v * v;
    if (norm2 == 0.0) break;  // flat logit: no direction to the boundary
    const double scale = -f / norm2;
    for (std::size_t j = 0; j < x.size(); ++j) {
      trace.r_total[j] += scale * w[j];
      trace.x_adv[j] = x[j] + (1.0 + spec.overshoot) * trace.r_total[j];
    }
    ClampUnit(trace.x_adv);
    ++trace.iterations;
  }
  return trace;
}

AdversarialBatch AttackDeepFool(const DifferentiableClassifier& model,
                                const EligibleSet& set, const AttackSpec& spec) {
  spec.Validate();
  Matrix x_adv = set.x;
  std::vector<std::size_t> iterations(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto trace = DeepFoolSingle(model, set.x.row(i), set.y[i], spec);
    std::copy(trace.x_adv.begin(), trace.x_adv.end(), x_adv.row(i).begin());
    iterations[i] = trace.iterations;
  }
  auto batch = MakeBatch(set, spec, x_adv, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    batch.examples[i].iterations_used = iterations[i];
  }
  Finalize(model, batch);
  if (spec.clip_unbounded) ApplyEpsilonClip(model, batch, spec.epsilon);
  return batch;
}

AdversarialBatch AttackCw(const DifferentiableClassifier& model,
                          const EligibleSet& set, const AttackSpec& spec) {
  spec.Validate();
  const std::size_t n = set.size();
  const std::size_t d = set.x.cols();
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;

  // tanh parametrisation, shifted so that u = u0 reproduces x exactly:
  //   x_adv(u) = x + (tanh(u) + 1)/2 - (tanh(u0) + 1)/2.
  Matrix u0(n, d);
  Matrix s0(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double t = std::clamp(2.0 * set.x(i, j) - 1.0, -kTanhLimit, kTanhLimit);
      u0(i, j) = std::atanh(t);
      s0(i, j) = 0.5 * (std::tanh(u0(i, j)) + 1.0);
    }
  }

  std::vector<double> c(n, spec.c_init);
  std::vector<double> lower(n, 0.0);
  std::vector<double> upper(n, kCwUpperInit);
  std::vector<double> best_l2(n, std::numeric_limits<double>::infinity());
  Matrix best = set.x;

  Matrix u(n, d);
  Matrix m(n, d);
  Matrix v(n, d);
  Matrix x_adv(n, d);
  Matrix grads;
  for (std::size_t search = 0; search < spec.binary_search_steps; ++search) {
    u = u0;
    m = Matrix(n, d);
    v = Matrix(n, d);
    std::vector<bool> succeeded(n, false);
    for (std::size_t it = 0; it <= spec.cw_inner_iters; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          x_adv(i, j) = set.x(i, j) + 0.5 * (std::tanh(u(i, j)) + 1.0) - s0(i, j);
        }
      }
      const auto logits = model.LogitInputGradients(x_adv, &grads);
      const double t = static_cast<double>(it + 1);
      const double bias1 = 1.0 - std::pow(kBeta1, t);
      const double bias2 = 1.0 - std::pow(kBeta2, t);
      for (std::size_t i = 0; i < n; ++i) {
        double l2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double dj = x_adv(i, j) - set.x(i, j);
          l2 += dj * dj;
        }
        l2 = std::sqrt(l2);
        if (LabelFromLogit(logits[i]) != set.y[i]) {
          succeeded[i] = true;
          if (l2 < best_l2[i]) {
            best_l2[i] = l2;
            std::copy(x_adv.row(i).begin(), x_adv.row(i).end(), best.row(i).begin());
          }
        }
        if (it == spec.cw_inner_iters) continue;

        // Margin of the true class over the other one with logits (0, z).
        const double sign = set.y[i] == 1 ? 1.0 : -1.0;
        const bool hinge_active = sign * logits[i] > -spec.kappa;
        for (std::size_t j = 0; j < d; ++j) {
          double gx = l2 > 0.0 ? (x_adv(i, j) - set.x(i, j)) / l2 : 0.0;
          if (hinge_active) gx += c[i] * sign * grads(i, j);
          const double th = std::tanh(u(i, j));
          const double gu = gx * 0.5 * (1.0 - th * th);
          m(i, j) = kBeta1 * m(i, j) + (1.0 - kBeta1) * gu;
          v(i, j) = kBeta2 * v(i, j) + (1.0 - kBeta2) * gu * gu;
          u(i, j) -= spec.cw_inner_lr * (m(i, j) / bias1) /
                     (std::sqrt(v(i, j) / bias2) + kAdamEps);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (succeeded[i]) {
        upper[i] = std::min(upper[i], c[i]);
        c[i] = 0.5 * (lower[i] + upper[i]);
      } else {
        lower[i] = std::max(lower[i], c[i]);
        c[i] = upper[i] < kCwUpperInit ? 0.5 * (lower[i] + upper[i]) : spec.c_growth * c[i];
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) ClampUnit(best.row(i));
  auto batch = MakeBatch(set, spec, best,
                         spec.binary_search_steps * spec.cw_inner_iters);
  Finalize(model, batch);
  if (spec.clip_unbounded) ApplyEpsilonClip(model, batch, spec.epsilon);
  return batch;
}

AdversarialBatch RunAttack(const DifferentiableClassifier& model,
                           const EligibleSet& set, const AttackSpec& spec) {
  switch (spec.method) {
    case AttackMethod::kGaussian: return AttackGaussian(model, set, spec);
    case AttackMethod::kFgsm: return AttackFgsm(model, set, spec);
    case AttackMethod::kBim: return AttackBim(model, set, spec);
    case AttackMethod::kPgd: return AttackPgd(model, set, spec);
    case AttackMethod::kDeepFool: return AttackDeepFool(model, set, spec);
    case AttackMethod::kCw: return AttackCw(model, set, spec);
  }
  throw ContractError("run_attack: unknown method");
}

void ApplyEpsilonClip(const DifferentiableClassifier& model, AdversarialBatch& batch,
                      double epsilon) {
  if (IsBounded(batch.attack.method)) return;
  for (auto& ex : batch.examples) ClipBoxAndBall(ex.x_adv, ex.x, epsilon);
  Finalize(model, batch);
}

void WriteBatchCsv(const AdversarialBatch& batch, const std::filesystem::path& path,
                   bool include_delta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t d = batch.examples.empty() ? 0 : batch.examples.front().delta.size();
  out << "instance_id,label,success,l2,linf,iterations_used";
  if (include_delta) {
    for (std::size_t j = 0; j < d; ++j) out << ",d" << j;
  }
  out << '\n';
  for (const auto& ex : batch.examples) {
    double l2 = 0.0;
    double linf = 0.0;
    for (const double v : ex.delta) {
      l2 += v * v;
      linf = std::max(linf, std::abs(v));
    }
    out << ex.instance_id << ',' << ex.label << ',' << (ex.success ? 1 : 0) << ','
        << internal::FormatDouble(std::sqrt(l2)) << ','
        << internal::FormatDouble(linf) << ',' << ex.iterations_used;
    if (include_delta) {
      for (const double v : ex.delta) out << ',' << internal::FormatDouble(v);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void WriteBatchJson(const AdversarialBatch& batch, const std::filesystem::path& path,
                    bool include_delta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& ex : batch.examples) {
    double l2 = 0.0;
    double linf = 0.0;
    for (const double v : ex.delta) {
      l2 += v * v;
      linf = std::max(linf, std::abs(v));
    }
    nlohmann::json entry = {{"instance_id", ex.instance_id},
                            {"label", ex.label},
                            {"success", ex.success},
                            {"l2", std::sqrt(l2)},
                            {"linf", linf},
                            {"iterations_used", ex.iterations_used}};
    if (include_delta) entry["delta"] = ex.delta;
    examples.push_back(std::move(entry));
  }
  const nlohmann::json doc = {{"dataset", batch.dataset_id},
                              {"model", batch.model_id},
                              {"attack", AttackName(batch.attack.method)},
                              {"epsilon", batch.attack.epsilon},
                              {"examples", std::move(examples)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace tabadv
