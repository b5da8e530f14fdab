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
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tabadv/bench.hpp"
#include "tabadv/error.hpp"
#include "text_util.hpp"

namespace tabadv {
namespace {

namespace pt = boost::property_tree;

std::string Unquote(std::string s) {
  s = std::string(internal::Trim(s));
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') &&
      s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

double ToDouble(const std::string& key, const std::string& value) {
  const auto parsed = internal::ParseDouble(Unquote(value));
  if (!parsed) throw ConfigError("config: '" + key + "' is not a number: " + value);
  return *parsed;
}

std::size_t ToCount(const std::string& key, const std::string& value) {
  const std::string s = Unquote(value);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config: '" + key + "' is not a non-negative integer: " + value);
  }
  return out;
}

bool ToBool(const std::string& key, const std::string& value) {
  const std::string s = Unquote(value);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: '" + key + "' is not a boolean: " + value);
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void ApplySection(const pt::ptree& section, const std::string& name,
                  const std::map<std::string, Setter>& setters) {
  for (const auto& [key, node] : section) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("config: unknown key '" + key + "' in [" + name + "]");
    }
    it->second(key, node.data());
  }
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(Unquote(value));
  return p.is_absolute() ? p : base / p;
}

}  // namespace

std::vector<double> ParseEpsilonList(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : ParseNameList(text)) {
    const auto v = internal::ParseDouble(item);
    if (!v) throw ConfigError("epsilon list: not a number: '" + item + "'");
    if (!(*v > 0.0) || !std::isfinite(*v)) {
      throw ConfigError("epsilon list: value must be positive: '" + item + "'");
    }
    out.push_back(*v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> ParseNameList(const std::string& text) {
  std::string s(internal::Trim(text));
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("list: unbalanced brackets in '" + text + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t stop = comma == std::string::npos ? s.size() : comma;
    const std::string item = Unquote(s.substr(start, stop - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

AttackSpec RunConfig::CellAttack(AttackMethod method, double epsilon,
                                 std::size_t repetition) const {
  AttackSpec spec = attack;
  spec.method = method;
  spec.epsilon = epsilon;
  spec.seed = seed + repetition;
  if (method == AttackMethod::kBim) {
    if (bim_step_size) spec.step_size = bim_step_size;
    if (bim_steps) spec.steps = *bim_steps;
  }
  return spec;
}

void RunConfig::Validate() const {
  if (datasets.empty()) throw ConfigError("config: no datasets configured");
  std::set<std::string> ids;
  for (const auto& d : datasets) {
    if (d.id.empty()) throw ConfigError("config: dataset without id");
    if (!ids.insert(d.id).second) throw ConfigError("config: duplicate dataset " + d.id);
  }
  if (models.empty()) throw ConfigError("config: no models configured");
  for (const auto& m : models) m.Validate();
  if (attacks.empty()) throw ConfigError("config: no attacks configured");
  if (eps_grid.empty()) throw ConfigError("config: empty epsilon grid");
  if (!std::is_sorted(eps_grid.begin(), eps_grid.end()) ||
      std::adjacent_find(eps_grid.begin(), eps_grid.end()) != eps_grid.end()) {
    throw ConfigError("config: epsilon grid must be strictly ascending");
  }
  if (!(eps_grid.front() > 0.0)) throw ConfigError("config: epsilons must be > 0");
  if (repetitions == 0) throw ConfigError("config: repetitions must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must lie in (0, 1)");
  if (!(plateau_delta > 0.0)) throw ConfigError("config: plateau_delta must be > 0");
  if (!(sparsity_tol > 0.0)) throw ConfigError("config: sparsity_tol must be > 0");
  if (bim_step_size && !(*bim_step_size > 0.0)) {
    throw ConfigError("config: bim_step_size must be > 0");
  }
  if (bim_steps && *bim_steps == 0) throw ConfigError("config: bim_steps must be >= 1");
  train.Validate();
  AttackSpec probe = attack;
  probe.epsilon = eps_grid.front();
  try {
    probe.Validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig ParseRunConfig(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }

  RunConfig cfg;
  const std::map<std::string, Setter> run_keys = {
      {"seed", [&](auto& k, auto& v) { cfg.seed = ToCount(k, v); }},
      {"repetitions", [&](auto& k, auto& v) { cfg.repetitions = ToCount(k, v); }},
      {"alpha", [&](auto& k, auto& v) { cfg.alpha = ToDouble(k, v); }},
      {"eps_grid", [&](auto&, auto& v) { cfg.eps_grid = ParseEpsilonList(v); }},
      {"models",
       [&](auto&, auto& v) {
         cfg.models.clear();
         for (const auto& n : ParseNameList(v)) cfg.models.push_back(ModelSpec::FromName(n));
       }},
      {"attacks",
       [&](auto&, auto& v) {
         cfg.attacks.clear();
         for (const auto& n : ParseNameList(v)) cfg.attacks.push_back(AttackFromName(n));
       }},
      {"out", [&](auto&, auto& v) { cfg.out_dir = Resolve(base_dir, v); }},
      {"cache", [&](auto&, auto& v) { cfg.cache_dir = Resolve(base_dir, v); }},
      {"plateau_delta", [&](auto& k, auto& v) { cfg.plateau_delta = ToDouble(k, v); }},
      {"sparsity_tol", [&](auto& k, auto& v) { cfg.sparsity_tol = ToDouble(k, v); }},
      {"successful_only",
       [&](auto& k, auto& v) { cfg.successful_only = ToBool(k, v); }},
      {"threads", [&](auto& k, auto& v) { cfg.threads = ToCount(k, v); }},
      {"quadrant_thresholds",
       [&](auto& k, auto& v) {
         const std::string mode = Unquote(v);
         if (mode != "baseline" && mode != "preset") {
           throw ConfigError("config: '" + k + "' must be baseline or preset");
         }
         cfg.preset_thresholds = mode == "preset";
       }},
  };
  const std::map<std::string, Setter> train_keys = {
      {"epochs", [&](auto& k, auto& v) { cfg.train.epochs = ToCount(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { cfg.train.batch_size = ToCount(k, v); }},
      {"learning_rate",
       [&](auto& k, auto& v) { cfg.train.learning_rate = ToDouble(k, v); }},
      {"beta1", [&](auto& k, auto& v) { cfg.train.beta1 = ToDouble(k, v); }},
      {"beta2", [&](auto& k, auto& v) { cfg.train.beta2 = ToDouble(k, v); }},
      {"adam_eps", [&](auto& k, auto& v) { cfg.train.adam_eps = ToDouble(k, v); }},
  };
  AttackSpec& a = cfg.attack;
  const std::map<std::string, Setter> attack_keys = {
      {"steps", [&](auto& k, auto& v) { a.steps = ToCount(k, v); }},
      {"step_size", [&](auto& k, auto& v) { a.step_size = ToDouble(k, v); }},
      {"random_start", [&](auto& k, auto& v) { a.random_start = ToBool(k, v); }},
      {"overshoot", [&](auto& k, auto& v) { a.overshoot = ToDouble(k, v); }},
      {"max_iter_deepfool",
       [&](auto& k, auto& v) { a.max_iter_deepfool = ToCount(k, v); }},
      {"binary_search_steps",
       [&](auto& k, auto& v) { a.binary_search_steps = ToCount(k, v); }},
      {"c_init", [&](auto& k, auto& v) { a.c_init = ToDouble(k, v); }},
      {"c_growth", [&](auto& k, auto& v) { a.c_growth = ToDouble(k, v); }},
      {"kappa", [&](auto& k, auto& v) { a.kappa = ToDouble(k, v); }},
      {"cw_inner_iters", [&](auto& k, auto& v) { a.cw_inner_iters = ToCount(k, v); }},
      {"cw_inner_lr", [&](auto& k, auto& v) { a.cw_inner_lr = ToDouble(k, v); }},
      {"noise_sigma_scale",
       [&](auto& k, auto& v) { a.noise_sigma_scale = ToDouble(k, v); }},
      {"clip_unbounded", [&](auto& k, auto& v) { a.clip_unbounded = ToBool(k, v); }},
      {"bim_step_size", [&](auto& k, auto& v) { cfg.bim_step_size = ToDouble(k, v); }},
      {"bim_steps", [&](auto& k, auto& v) { cfg.bim_steps = ToCount(k, v); }},
  };

  const std::string kDatasetPrefix = "dataset.";
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      throw ConfigError("config: key '" + name + "' outside of a section");
    }
    if (name == "run") {
      ApplySection(section, name, run_keys);
    } else if (name == "train") {
      ApplySection(section, name, train_keys);
    } else if (name == "attack") {
      ApplySection(section, name, attack_keys);
    } else if (name.rfind(kDatasetPrefix, 0) == 0) {
      DatasetConfig d;
      d.id = name.substr(kDatasetPrefix.size());
      const std::map<std::string, Setter> dataset_keys = {
          {"csv", [&](auto&, auto& v) { d.csv = Resolve(base_dir, v); }},
          {"schema", [&](auto&, auto& v) { d.schema = Resolve(base_dir, v); }},
      };
      ApplySection(section, name, dataset_keys);
      if (d.csv.empty() || d.schema.empty()) {
        throw ConfigError("config: [" + name + "] needs both csv and schema");
      }
      cfg.datasets.push_back(std::move(d));
    } else {
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }
  cfg.train.seed = cfg.seed;
  cfg.attack.seed = cfg.seed;
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return ParseRunConfig(in, path.has_parent_path() ? path.parent_path()
                                                   : std::filesystem::path("."));
}

}  // namespace tabadv
