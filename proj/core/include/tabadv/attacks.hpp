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

// White-box, untargeted evasion attacks on a binary differentiable
// classifier. Every attack works in the encoded [0, 1]^d space; one-hot
// columns are perturbed as continuous values.
//
// Bounded methods (FGSM, BIM, PGD, Gaussian noise) keep every output inside
// the l-inf ball of radius epsilon intersected with the unit box. The
// unbounded methods (DeepFool, C&W) search for a minimal l2 perturbation and,
// when `clip_unbounded` is set, the result is clipped into the same ball
// afterwards and its success re-evaluated.

#ifndef TABADV_ATTACKS_HPP_
#define TABADV_ATTACKS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabadv/matrix.hpp"
#include "tabadv/models.hpp"

namespace tabadv {

enum class AttackMethod { kGaussian, kFgsm, kBim, kPgd, kDeepFool, kCw };

// "gaussian", "fgsm", "bim", "pgd", "deepfool", "cw".
std::string AttackName(AttackMethod method);
AttackMethod AttackFromName(const std::string& name);
bool IsBounded(AttackMethod method);
std::vector<AttackMethod> AllAttacks();

struct AttackSpec {
  AttackMethod method = AttackMethod::kFgsm;
  double epsilon = 0.1;

  // BIM / PGD.
  std::size_t steps = 10;
  std::optional<double> step_size;  // defaults to epsilon / steps
  bool random_start = true;         // PGD only

  // DeepFool.
  double overshoot = 0.02;
  std::size_t max_iter_deepfool = 50;

  // C&W (l2).
  std::size_t binary_search_steps = 10;
  double c_init = 1e-3;
  double c_growth = 10.0;  // multiplier for c until the first success
  double kappa = 0.0;
  std::size_t cw_inner_iters = 200;
  double cw_inner_lr = 0.005;

  // Gaussian baseline: sigma = noise_sigma_scale * epsilon.
  double noise_sigma_scale = 1.0;

  bool clip_unbounded = true;
  std::uint64_t seed = 42;

  double EffectiveStepSize() const {
    return step_size.value_or(epsilon / static_cast<double>(steps));
  }
  double NoiseSigma() const { return noise_sigma_scale * epsilon; }
  void Validate() const;

  // BIM with alpha = 0.05 and 20 iterations instead of alpha = eps/10.
  static AttackSpec BimSmallStep(double epsilon);
};

struct AdversarialExample {
  std::size_t instance_id = 0;  // row index in the source dataset
  int label = 0;
  std::vector<double> x;
  std::vector<double> x_adv;
  std::vector<double> delta;  // x_adv - x
  bool success = false;       // model label on x_adv != label
  std::size_t iterations_used = 0;
};

// Test rows the model classifies correctly; only these are attacked.
struct EligibleSet {
  Matrix x;
  std::vector<int> y;
  std::vector<std::size_t> ids;

  std::size_t size() const noexcept { return y.size(); }
};

EligibleSet SelectEligible(const DifferentiableClassifier& model, const Matrix& x,
                           std::span<const int> y,
                           std::span<const std::size_t> ids);

struct AdversarialBatch {
  std::vector<AdversarialExample> examples;
  AttackSpec attack;
  std::string model_id;
  std::string dataset_id;
};

// Componentwise clamp into [x_ref - eps, x_ref + eps] intersected with [0, 1].
void ClipBoxAndBall(std::span<double> x, std::span<const double> x_ref,
                    double epsilon);
std::vector<double> ClippedToBoxAndBall(std::span<const double> x,
                                        std::span<const double> x_ref, double epsilon);

// sign(0) = 0.
inline double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

AdversarialBatch AttackGaussian(const DifferentiableClassifier& model,
                                const EligibleSet& set, const AttackSpec& spec);
AdversarialBatch AttackFgsm(const DifferentiableClassifier& model,
                            const EligibleSet& set, const AttackSpec& spec);
AdversarialBatch AttackBim(const DifferentiableClassifier& model,
                           const EligibleSet& set, const AttackSpec& spec);
AdversarialBatch AttackPgd(const DifferentiableClassifier& model,
                           const EligibleSet& set, const AttackSpec& spec);
AdversarialBatch AttackDeepFool(const DifferentiableClassifier& model,
                                const EligibleSet& set, const AttackSpec& spec);
AdversarialBatch AttackCw(const DifferentiableClassifier& model,
                          const EligibleSet& set, const AttackSpec& spec);

// Dispatches on spec.method.
AdversarialBatch RunAttack(const DifferentiableClassifier& model,
                           const EligibleSet& set, const AttackSpec& spec);

struct DeepFoolTrace {
  std::vector<double> r_total;  // accumulated projection steps, no overshoot
  std::vector<double> x_adv;    // x + (1 + overshoot) r_total, box-clamped
  std::size_t iterations = 0;
  bool converged = false;  // label flipped within max_iter_deepfool
};

// Binary DeepFool on one input: repeatedly steps by -f/||grad f||^2 grad f
// (f the logit) until the overshot point changes label.
DeepFoolTrace DeepFoolSingle(const DifferentiableClassifier& model,
                             std::span<const double> x, int label,
                             const AttackSpec& spec);

// Clips unbounded-attack outputs into the epsilon ball and recomputes
// deltas and success flags. A no-op for bounded methods.
void ApplyEpsilonClip(const DifferentiableClassifier& model, AdversarialBatch& batch,
                      double epsilon);

// Export: instance_id,label,success,l2,linf,iterations_used[,d0..d{n-1}].
void WriteBatchCsv(const AdversarialBatch& batch, const std::filesystem::path& path,
                   bool include_delta = false);
void WriteBatchJson(const AdversarialBatch& batch, const std::filesystem::path& path,
                    bool include_delta = false);

}  // namespace tabadv

#endif  // TABADV_ATTACKS_HPP_
