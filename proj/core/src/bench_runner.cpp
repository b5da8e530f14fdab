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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "tabadv/bench.hpp"
#include "tabadv/error.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

using internal::FormatDouble;

std::uint64_t Fnv1a(std::uint64_t h, std::string_view bytes) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t HashFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return Fnv1a(0xcbf29ce484222325ULL, bytes);
}

std::string DatasetFingerprint(const DatasetConfig& d, const RunConfig& cfg) {
  std::ostringstream s;
  s << "dataset " << d.id << "\ncsv " << HashFile(d.csv) << "\nschema "
    << HashFile(d.schema) << "\nseed " << cfg.seed << '\n';
  return s.str();
}

std::string ModelFingerprint(const std::string& dataset_fp, const ModelSpec& spec,
                             const RunConfig& cfg) {
  std::ostringstream s;
  s << dataset_fp << "model " << spec.Name() << "\nepochs " << cfg.train.epochs
    << "\nbatch " << cfg.train.batch_size << "\nlr "
    << FormatDouble(cfg.train.learning_rate) << "\nbetas "
    << FormatDouble(cfg.train.beta1) << ' ' << FormatDouble(cfg.train.beta2) << ' '
    << FormatDouble(cfg.train.adam_eps) << '\n';
  return s.str();
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

// Attacks whose output depends on the repetition seed.
bool IsStochastic(const RunConfig& cfg, AttackMethod method) {
  return method == AttackMethod::kGaussian ||
         (method == AttackMethod::kPgd && cfg.attack.random_start);
}

std::size_t ThreadCount(const RunConfig& cfg, std::size_t jobs) {
  std::size_t n = cfg.threads;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

template <typename Fn>
void ParallelFor(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct Job {
  std::size_t dataset = 0;
  std::size_t model = 0;
  std::size_t attack = 0;
  std::size_t rep = 0;
};

struct JobOutput {
  std::vector<std::optional<MetricRecord>> by_eps;
  std::vector<std::string> errors;  // parallel to by_eps
};

MetricRecord Evaluate(const AdversarialBatch& batch, const PreparedDataset& ds,
                      const RunConfig& cfg) {
  MetricOptions options;
  options.alpha = cfg.alpha;
  options.sparsity_tol = cfg.sparsity_tol;
  options.successful_only = cfg.successful_only;
  return EvaluateBatch(batch, ds.data.encoding, ds.stats, options);
}

JobOutput RunJob(const RunConfig& cfg, const PreparedDataset& ds,
                 const FeedForwardClassifier& model, const EligibleSet& eligible,
                 AttackMethod method, std::size_t rep) {
  const std::size_t n_eps = cfg.eps_grid.size();
  JobOutput out{std::vector<std::optional<MetricRecord>>(n_eps),
                std::vector<std::string>(n_eps)};
  const auto run_cell = [&](std::size_t e, auto&& make_batch) {
    try {
      out.by_eps[e] = Evaluate(make_batch(), ds, cfg);
    } catch (const std::exception& ex) {
      out.errors[e] = ex.what();
    }
  };

  if (IsBounded(method)) {
    for (std::size_t e = 0; e < n_eps; ++e) {
      run_cell(e, [&] {
        return RunAttack(model, eligible, cfg.CellAttack(method, cfg.eps_grid[e], rep));
      });
    }
    return out;
  }

  // Unbounded searches ignore epsilon until the final clip, so search once
  // and clip per grid point.
  AttackSpec spec = cfg.CellAttack(method, cfg.eps_grid.back(), rep);
  spec.clip_unbounded = false;
  AdversarialBatch base;
  try {
    base = RunAttack(model, eligible, spec);
  } catch (const std::exception& ex) {
    std::fill(out.errors.begin(), out.errors.end(), ex.what());
    return out;
  }
  for (std::size_t e = 0; e < n_eps; ++e) {
    run_cell(e, [&] {
      AdversarialBatch batch = base;
      batch.attack.epsilon = cfg.eps_grid[e];
      if (cfg.attack.clip_unbounded) ApplyEpsilonClip(model, batch, cfg.eps_grid[e]);
      batch.attack.clip_unbounded = cfg.attack.clip_unbounded;
      return batch;
    });
  }
  return out;
}

}  // namespace

MetricRecord AverageMetrics(std::span<const MetricRecord> runs) {
  if (runs.empty()) throw ContractError("average_metrics: no runs");
  MetricRecord avg;
  for (const auto& r : runs) {
    avg.asr += r.asr;
    avg.mean_l2 += r.mean_l2;
    avg.mean_l1 += r.mean_l1;
    avg.mean_linf += r.mean_linf;
    avg.sparsity_rate += r.sparsity_rate;
    avg.sparsity_rate_num += r.sparsity_rate_num;
    avg.sparsity_rate_cat += r.sparsity_rate_cat;
    avg.outlier_rate += r.outlier_rate;
    avg.mean_sensitivity += r.mean_sensitivity;
  }
  const double n = static_cast<double>(runs.size());
  avg.asr /= n;
  avg.mean_l2 /= n;
  avg.mean_l1 /= n;
  avg.mean_linf /= n;
  avg.sparsity_rate /= n;
  avg.sparsity_rate_num /= n;
  avg.sparsity_rate_cat /= n;
  avg.outlier_rate /= n;
  avg.mean_sensitivity /= n;
  return avg;
}

PreparedDataset PrepareDataset(const DatasetConfig& dataset, std::uint64_t seed) {
  const TableSchema schema = LoadSchemaManifest(dataset.schema);
  const RawTable table = LoadTable(dataset.csv, schema);
  const SplitIndices split = SplitStratified(table.num_rows(), table.labels, seed);
  const RawTable imputed = Impute(table, schema, split.train);
  PreparedDataset out;
  out.id = dataset.id;
  out.data = FitEncode(imputed, schema, split);
  out.stats = FitStatistics(out.data);
  return out;
}

PreparedDataset PrepareDatasetCached(const DatasetConfig& dataset,
                                     const RunConfig& cfg) {
  const auto dir = cfg.EffectiveCacheDir() / dataset.id;
  const auto fp_path = dir / "dataset.fingerprint";
  const std::string fp = DatasetFingerprint(dataset, cfg);
  if (ReadText(fp_path) == fp) {
    PreparedDataset out;
    out.id = dataset.id;
    out.data = LoadEncodedDataset(dir);
    out.stats = FitStatistics(out.data);
    return out;
  }
  PreparedDataset out = PrepareDataset(dataset, cfg.seed);
  SaveEncodedDataset(out.data, dir);
  WriteText(fp_path, fp);
  return out;
}

FeedForwardClassifier TrainModelCached(const PreparedDataset& dataset,
                                       const ModelSpec& spec, const RunConfig& cfg) {
  TrainConfig train = cfg.train;
  train.seed = cfg.seed;
  const auto dir = cfg.EffectiveCacheDir() / dataset.id;
  const auto model_path = dir / ("model_" + spec.Name() + ".txt");
  const auto fp_path = dir / ("model_" + spec.Name() + ".fingerprint");

  std::string fp;
  const auto d = std::find_if(cfg.datasets.begin(), cfg.datasets.end(),
                              [&](const auto& c) { return c.id == dataset.id; });
  if (d != cfg.datasets.end()) fp = ModelFingerprint(DatasetFingerprint(*d, cfg), spec, cfg);
  if (!fp.empty() && ReadText(fp_path) == fp && std::filesystem::exists(model_path)) {
    return FeedForwardClassifier::Load(model_path);
  }
  FeedForwardClassifier model = Train(dataset.data, spec, train);
  if (!fp.empty()) {
    std::filesystem::create_directories(dir);
    model.Save(model_path);
    WriteText(fp_path, fp);
  }
  return model;
}

ModelSummary Summarize(const PreparedDataset& dataset, const ModelSpec& spec,
                       const FeedForwardClassifier& model) {
  const auto& ds = dataset.data;
  const auto accuracy = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
    return Accuracy(model, ds.Rows(idx), ds.Labels(idx));
  };
  ModelSummary s;
  s.dataset = dataset.id;
  s.model = spec.Name();
  s.train_accuracy = accuracy(ds.split.train);
  s.val_accuracy = accuracy(ds.split.val);
  s.test_accuracy = accuracy(ds.split.test);
  s.eligible = EligibleTestSet(dataset, model).size();
  return s;
}

EligibleSet EligibleTestSet(const PreparedDataset& dataset,
                            const DifferentiableClassifier& model) {
  const auto& ds = dataset.data;
  return SelectEligible(model, ds.Rows(ds.split.test), ds.Labels(ds.split.test),
                        ds.split.test);
}

BenchResult RunGrid(const RunConfig& cfg, std::span<const PreparedDataset> datasets,
                    const ModelGrid& models) {
  if (models.size() != datasets.size()) {
    throw ContractError("run_grid: one model row per dataset required");
  }
  BenchResult result;

  // Eligible sets, once per (dataset, model).
  std::vector<std::vector<EligibleSet>> eligible(datasets.size());
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    eligible[d].resize(cfg.models.size());
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      if (!models[d][m]) continue;
      eligible[d][m] = EligibleTestSet(datasets[d], *models[d][m]);
      result.models.push_back(Summarize(datasets[d], cfg.models[m], *models[d][m]));
    }
  }

  std::vector<Job> jobs;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      if (!models[d][m]) continue;
      for (std::size_t a = 0; a < cfg.attacks.size(); ++a) {
        const std::size_t reps = IsStochastic(cfg, cfg.attacks[a]) ? cfg.repetitions : 1;
        for (std::size_t r = 0; r < reps; ++r) jobs.push_back({d, m, a, r});
      }
    }
  }

  std::vector<JobOutput> outputs(jobs.size());
  ParallelFor(jobs.size(), ThreadCount(cfg, jobs.size()), [&](std::size_t i) {
    const Job& job = jobs[i];
    outputs[i] = RunJob(cfg, datasets[job.dataset], *models[job.dataset][job.model],
                        eligible[job.dataset][job.model], cfg.attacks[job.attack],
                        job.rep);
  });

  // Jobs are ordered by (dataset, model, attack, rep), so the repetitions of
  // one cell are contiguous.
  for (std::size_t i = 0; i < jobs.size();) {
    std::size_t end = i;
    while (end < jobs.size() && jobs[end].dataset == jobs[i].dataset &&
           jobs[end].model == jobs[i].model && jobs[end].attack == jobs[i].attack) {
      ++end;
    }
    const Job& job = jobs[i];
    const std::string& dataset_id = datasets[job.dataset].id;
    const std::string model_id = cfg.models[job.model].Name();
    const AttackMethod method = cfg.attacks[job.attack];
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
      std::vector<MetricRecord> runs;
      std::string error;
      for (std::size_t k = i; k < end; ++k) {
        if (outputs[k].by_eps[e]) {
          runs.push_back(*outputs[k].by_eps[e]);
        } else if (error.empty()) {
          error = outputs[k].errors[e];
        }
      }
      if (!error.empty()) {
        result.errors.push_back(
            {dataset_id, model_id, AttackName(method), cfg.eps_grid[e], error});
        continue;
      }
      RunRecord rec;
      rec.dataset = dataset_id;
      rec.model = model_id;
      rec.attack = method;
      rec.epsilon = cfg.eps_grid[e];
      rec.repetitions = cfg.repetitions;
      rec.metrics = AverageMetrics(runs);
      result.records.push_back(std::move(rec));
    }
    i = end;
  }

  std::vector<MetricRecord> metrics;
  metrics.reserve(result.records.size());
  for (const auto& r : result.records) metrics.push_back(r.metrics);
  if (!metrics.empty()) ImperceptibilityScore(metrics);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    result.records[i].metrics = metrics[i];
  }
  return result;
}

BenchResult RunBenchmark(const RunConfig& cfg, bool use_cache) {
  cfg.Validate();
  std::vector<PreparedDataset> datasets;
  std::vector<CellError> errors;
  for (const auto& d : cfg.datasets) {
    try {
      datasets.push_back(use_cache ? PrepareDatasetCached(d, cfg)
                                   : PrepareDataset(d, cfg.seed));
    } catch (const std::exception& ex) {
      errors.push_back({d.id, "", "", std::nullopt, ex.what()});
    }
  }

  ModelGrid models(datasets.size());
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (const auto& spec : cfg.models) {
      try {
        if (use_cache) {
          models[d].emplace_back(TrainModelCached(datasets[d], spec, cfg));
        } else {
          TrainConfig train = cfg.train;
          train.seed = cfg.seed;
          models[d].emplace_back(Train(datasets[d].data, spec, train));
        }
      } catch (const std::exception& ex) {
        models[d].emplace_back(std::nullopt);
        errors.push_back({datasets[d].id, spec.Name(), "", std::nullopt, ex.what()});
      }
    }
  }

  BenchResult result = RunGrid(cfg, datasets, models);
  result.errors.insert(result.errors.begin(), errors.begin(), errors.end());
  return result;
}

std::vector<BimComparisonRow> CompareBimPresets(const RunConfig& cfg,
                                                std::span<const PreparedDataset> datasets,
                                                const ModelGrid& models,
                                                double adjusted_step,
                                                std::size_t adjusted_steps) {
  std::vector<BimComparisonRow> rows;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      if (!models[d][m]) continue;
      const auto& model = *models[d][m];
      const EligibleSet eligible = EligibleTestSet(datasets[d], model);
      for (const double eps : cfg.eps_grid) {
        AttackSpec base = cfg.attack;
        base.method = AttackMethod::kBim;
        base.epsilon = eps;
        base.seed = cfg.seed;
        AttackSpec adjusted = base;
        base.step_size.reset();
        adjusted.step_size = adjusted_step;
        adjusted.steps = adjusted_steps;
        rows.push_back({datasets[d].id, cfg.models[m].Name(), eps,
                        AttackSuccessRate(AttackBim(model, eligible, base)),
                        AttackSuccessRate(AttackBim(model, eligible, adjusted))});
      }
    }
  }
  return rows;
}

}  // namespace tabadv
