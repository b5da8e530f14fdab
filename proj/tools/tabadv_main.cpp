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

// tabadv: command-line driver for the adversarial robustness benchmark.
//
//   tabadv prepare --config bench.ini
//   tabadv train   --config bench.ini --models lr
//   tabadv attack  --config bench.ini --attacks bim --bim-alpha 0.05 --bim-steps 20
//   tabadv report  --config bench.ini
//   tabadv all     --config bench.ini --out results/
//   tabadv compare-bim --config bench.ini --datasets breast_cancer --models lr

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tabadv/bench.hpp"
#include "tabadv/error.hpp"

namespace {

constexpr int kUsageExit = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string eps_grid;
  std::string datasets;
  std::string models;
  std::string attacks;
  std::string out;
  std::optional<double> bim_alpha;
  std::optional<std::size_t> bim_steps;
  std::optional<std::size_t> repetitions;
  std::optional<std::size_t> threads;
};

void AddCommonOptions(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "Benchmark configuration file");
  cmd->add_option("--seed", opt.seed, "Base seed (splits, training, attacks)");
  cmd->add_option("--alpha", opt.alpha, "Significance level of the outlier test");
  cmd->add_option("--eps-grid", opt.eps_grid, "Comma-separated perturbation budgets");
  cmd->add_option("--datasets", opt.datasets, "Comma-separated dataset ids");
  cmd->add_option("--models", opt.models, "Comma-separated models (lr, mlp)");
  cmd->add_option("--attacks", opt.attacks,
                  "Comma-separated attacks (gaussian, fgsm, bim, pgd, deepfool, cw)");
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_option("--bim-alpha", opt.bim_alpha, "BIM step size override");
  cmd->add_option("--bim-steps", opt.bim_steps, "BIM iteration count override");
  cmd->add_option("--reps", opt.repetitions, "Repetitions per stochastic cell");
  cmd->add_option("--threads", opt.threads, "Worker threads (0: all cores)");
}

tabadv::RunConfig BuildConfig(const Options& opt) {
  if (opt.config.empty()) throw tabadv::ConfigError("missing --config <file>");
  if (!std::filesystem::exists(opt.config)) {
    throw tabadv::ConfigError("config file not found: " + opt.config);
  }
  tabadv::RunConfig cfg = tabadv::LoadRunConfig(opt.config);
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.train.seed = *opt.seed;
    cfg.attack.seed = *opt.seed;
  }
  if (opt.alpha) cfg.alpha = *opt.alpha;
  if (!opt.eps_grid.empty()) cfg.eps_grid = tabadv::ParseEpsilonList(opt.eps_grid);
  if (!opt.datasets.empty()) {
    const auto wanted = tabadv::ParseNameList(opt.datasets);
    std::vector<tabadv::DatasetConfig> kept;
    for (const auto& id : wanted) {
      bool found = false;
      for (const auto& d : cfg.datasets) {
        if (d.id == id) {
          kept.push_back(d);
          found = true;
        }
      }
      if (!found) throw tabadv::ConfigError("dataset '" + id + "' is not configured");
    }
    cfg.datasets = std::move(kept);
  }
  if (!opt.models.empty()) {
    cfg.models.clear();
    for (const auto& n : tabadv::ParseNameList(opt.models)) {
      cfg.models.push_back(tabadv::ModelSpec::FromName(n));
    }
  }
  if (!opt.attacks.empty()) {
    cfg.attacks.clear();
    for (const auto& n : tabadv::ParseNameList(opt.attacks)) {
      cfg.attacks.push_back(tabadv::AttackFromName(n));
    }
  }
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  if (opt.bim_alpha) cfg.bim_step_size = *opt.bim_alpha;
  if (opt.bim_steps) cfg.bim_steps = *opt.bim_steps;
  if (opt.repetitions) cfg.repetitions = *opt.repetitions;
  if (opt.threads) cfg.threads = *opt.threads;
  cfg.Validate();
  return cfg;
}

std::optional<tabadv::QuadrantThresholds> FixedThresholds(const tabadv::RunConfig& cfg) {
  if (!cfg.preset_thresholds) return std::nullopt;
  return tabadv::QuadrantThresholds::Preset();
}

void ReportErrors(const tabadv::BenchResult& result) {
  for (const auto& e : result.errors) {
    std::cerr << "warning: cell failed (" << e.dataset;
    if (!e.model.empty()) std::cerr << ", " << e.model;
    if (!e.attack.empty()) std::cerr << ", " << e.attack;
    if (e.epsilon) std::cerr << ", eps=" << *e.epsilon;
    std::cerr << "): " << e.message << '\n';
  }
}

void PrintModels(const tabadv::BenchResult& result) {
  for (const auto& m : result.models) {
    std::printf("%-16s %-4s train=%.4f val=%.4f test=%.4f eligible=%zu\n",
                m.dataset.c_str(), m.model.c_str(), m.train_accuracy, m.val_accuracy,
                m.test_accuracy, m.eligible);
  }
}

struct Pipeline {
  std::vector<tabadv::PreparedDataset> datasets;
  tabadv::ModelGrid models;
};

Pipeline PrepareAndTrain(const tabadv::RunConfig& cfg, bool train) {
  Pipeline p;
  for (const auto& d : cfg.datasets) {
    p.datasets.push_back(tabadv::PrepareDatasetCached(d, cfg));
  }
  if (!train) return p;
  for (const auto& ds : p.datasets) {
    auto& row = p.models.emplace_back();
    for (const auto& spec : cfg.models) {
      row.emplace_back(tabadv::TrainModelCached(ds, spec, cfg));
    }
  }
  return p;
}

int RunPrepare(const tabadv::RunConfig& cfg) {
  const auto p = PrepareAndTrain(cfg, false);
  for (const auto& ds : p.datasets) {
    const auto& s = ds.data.split;
    std::printf("%-16s rows=%zu d_total=%zu train=%zu val=%zu test=%zu\n",
                ds.id.c_str(), ds.data.x.rows(), ds.data.encoding.d_total,
                s.train.size(), s.val.size(), s.test.size());
  }
  std::printf("cache: %s\n", cfg.EffectiveCacheDir().string().c_str());
  return 0;
}

int RunTrain(const tabadv::RunConfig& cfg) {
  const auto p = PrepareAndTrain(cfg, true);
  tabadv::BenchResult summary;
  for (std::size_t d = 0; d < p.datasets.size(); ++d) {
    for (std::size_t m = 0; m < cfg.models.size(); ++m) {
      summary.models.push_back(
          tabadv::Summarize(p.datasets[d], cfg.models[m], *p.models[d][m]));
    }
  }
  PrintModels(summary);
  return 0;
}

int RunAttack(const tabadv::RunConfig& cfg) {
  const auto result = tabadv::RunBenchmark(cfg);
  ReportErrors(result);
  const auto path = cfg.out_dir / "records.csv";
  tabadv::WriteRecordsCsv(result.records, path);
  std::printf("%zu records written to %s\n", result.records.size(),
              path.string().c_str());
  return 0;
}

int RunReport(const tabadv::RunConfig& cfg) {
  const auto path = cfg.out_dir / "records.csv";
  const auto records = tabadv::ReadRecordsCsv(path);
  for (const auto& r : records) {
    if (!r.metrics.is_score) {
      throw tabadv::ContractError("records in " + path.string() +
                                  " carry no imperceptibility score");
    }
  }
  const auto analyses = tabadv::Analyze(records, cfg.plateau_delta, FixedThresholds(cfg));
  tabadv::EmitReports(records, analyses, nullptr, cfg.out_dir);
  std::printf("reports written to %s\n", cfg.out_dir.string().c_str());
  return 0;
}

int RunAll(const tabadv::RunConfig& cfg) {
  const auto result = tabadv::RunBenchmark(cfg);
  ReportErrors(result);
  PrintModels(result);
  const auto analyses = tabadv::Analyze(result.records, cfg.plateau_delta, FixedThresholds(cfg));
  tabadv::EmitReports(result.records, analyses, &result, cfg.out_dir);
  std::printf("%zu records; reports written to %s\n", result.records.size(),
              cfg.out_dir.string().c_str());
  return 0;
}

int RunCompareBim(const tabadv::RunConfig& cfg, const Options& opt) {
  const auto p = PrepareAndTrain(cfg, true);
  const auto rows = tabadv::CompareBimPresets(cfg, p.datasets, p.models,
                                              opt.bim_alpha.value_or(0.05),
                                              opt.bim_steps.value_or(20));
  const auto path = cfg.out_dir / "bim_comparison.csv";
  tabadv::WriteBimComparison(rows, path);
  for (const auto& r : rows) {
    std::printf("%-16s %-4s eps=%-5g default=%.4f adjusted=%.4f\n", r.dataset.c_str(),
                r.model.c_str(), r.epsilon, r.asr_default, r.asr_adjusted);
  }
  std::printf("comparison written to %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial robustness and imperceptibility benchmark for tabular models"};
  app.require_subcommand(1);
  Options opt;

  auto* prepare = app.add_subcommand("prepare", "Ingest, split and encode datasets");
  auto* train = app.add_subcommand("train", "Train the configured models");
  auto* attack = app.add_subcommand("attack", "Run the attack grid and write records");
  auto* report = app.add_subcommand("report", "Analyse records.csv and write reports");
  auto* all = app.add_subcommand("all", "Run the full pipeline");
  auto* compare = app.add_subcommand(
      "compare-bim", "Compare the default and small-step BIM presets");
  for (auto* cmd : {prepare, train, attack, report, all, compare}) {
    AddCommonOptions(cmd, opt);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  try {
    const tabadv::RunConfig cfg = BuildConfig(opt);
    if (prepare->parsed()) return RunPrepare(cfg);
    if (train->parsed()) return RunTrain(cfg);
    if (attack->parsed()) return RunAttack(cfg);
    if (report->parsed()) return RunReport(cfg);
    if (all->parsed()) return RunAll(cfg);
    if (compare->parsed()) return RunCompareBim(cfg, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
