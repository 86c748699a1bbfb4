/**
 * Copyright 2026 The BO-Aug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef BOAUG_APP_CONFIG_HPP_
#define BOAUG_APP_CONFIG_HPP_

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "boaug/dataset.hpp"
#include "boaug/errors.hpp"
#include "boaug/evaluator.hpp"
#include "boaug/search.hpp"

namespace boaug::app {

struct DatasetSpec {
  std::string format;  // "cifar10" or "image_dir"
  std::string path;
};

struct BuiltinSpec {
  DatasetSpec dataset;
  std::size_t train_n = 4000;
  std::size_t val_n = 0;  // 0 -> train_n / 5
  bool stratified = false;
  eval::ClassifierConfig classifier;

  std::size_t effective_val_n() const { return val_n > 0 ? val_n : train_n / 5; }
};

struct EvaluatorSpec {
  std::string type;  // "synthetic", "builtin", "external"
  std::string name;  // synthetic benchmark name
  BuiltinSpec builtin;
  std::string command;   // external
  double timeout_s = 300.0;
};

struct AppConfig {
  int version = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "boaug_out";
  int parallel = 1;
  std::string magnitude_table = "stock";
  search::SearchConfig search;
  EvaluatorSpec evaluator{.type = "synthetic", .name = "sphere"};
};

namespace detail {

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + where + key + "' has the wrong type");
  }
}

inline constexpr std::uint64_t kSplitTag = 0x53504c54;
inline constexpr std::uint64_t kEvalTag = 0x4556414c;

}  // namespace detail

inline AppConfig config_from_json(const nlohmann::json& j, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": top level must be a JSON object");
  AppConfig cfg;
  cfg.version = detail::field_or<int>(j, "version", 1, "");
  if (cfg.version != 1) {
    throw ConfigError(origin + ": unsupported config version " + std::to_string(cfg.version));
  }
  cfg.seed = detail::field_or<std::uint64_t>(j, "seed", 0, "");
  cfg.output_dir = detail::field_or<std::string>(j, "output_dir", "boaug_out", "");
  cfg.parallel = detail::field_or<int>(j, "parallel", 1, "");
  cfg.magnitude_table = detail::field_or<std::string>(j, "magnitude_table", "stock", "");
  cfg.search.ranges = policy::MagnitudeTable::by_name(cfg.magnitude_table);

  if (j.contains("search")) {
    const auto& s = j.at("search");
    cfg.search.runs = detail::field_or<int>(s, "runs", 8, "search.");
    cfg.search.init_num = detail::field_or<int>(s, "init", 10, "search.");
    cfg.search.iter_num = detail::field_or<int>(s, "iters", 90, "search.");
    cfg.search.sub_policies_per_policy =
        detail::field_or<int>(s, "sub_policies", 3, "search.");
    if (s.contains("mcmc")) {
      const auto& m = s.at("mcmc");
      cfg.search.mcmc.burn_in = detail::field_or<int>(m, "burn_in", 50, "search.mcmc.");
      cfg.search.mcmc.thinning = detail::field_or<int>(m, "thinning", 5, "search.mcmc.");
      cfg.search.mcmc.samples = detail::field_or<int>(m, "samples", 10, "search.mcmc.");
      cfg.search.mcmc.width = detail::field_or<double>(m, "width", 2.0, "search.mcmc.");
    }
    if (s.contains("cma")) {
      const auto& c = s.at("cma");
      cfg.search.cma.max_evals = detail::field_or<long>(c, "max_evals", 2000, "search.cma.");
      cfg.search.cma.restarts = detail::field_or<int>(c, "restarts", 2, "search.cma.");
    }
  }

  if (!j.contains("evaluator")) throw ConfigError(origin + ": missing 'evaluator' object");
  const auto& e = j.at("evaluator");
  cfg.evaluator.type = detail::field_or<std::string>(e, "type", "", "evaluator.");
  if (cfg.evaluator.type == "synthetic") {
    cfg.evaluator.name = detail::field_or<std::string>(e, "name", "sphere", "evaluator.");
    cfg.search.dataset_id = "synthetic:" + cfg.evaluator.name;
    cfg.search.model_id = "analytic";
  } else if (cfg.evaluator.type == "builtin") {
    if (!e.contains("dataset")) {
      throw ConfigError(origin + ": builtin evaluator needs a 'dataset' object");
    }
    const auto& d = e.at("dataset");
    cfg.evaluator.builtin.dataset.format =
        detail::field_or<std::string>(d, "format", "", "evaluator.dataset.");
    cfg.evaluator.builtin.dataset.path =
        detail::field_or<std::string>(d, "path", "", "evaluator.dataset.");
    if (cfg.evaluator.builtin.dataset.format != "cifar10" &&
        cfg.evaluator.builtin.dataset.format != "image_dir") {
      throw ConfigError(origin + ": evaluator.dataset.format must be 'cifar10' or 'image_dir'");
    }
    if (!std::filesystem::exists(cfg.evaluator.builtin.dataset.path)) {
      throw ConfigError(origin + ": dataset path does not exist: " +
                        cfg.evaluator.builtin.dataset.path);
    }
    cfg.evaluator.builtin.train_n =
        detail::field_or<std::size_t>(e, "train_n", 4000, "evaluator.");
    cfg.evaluator.builtin.val_n = detail::field_or<std::size_t>(e, "val_n", 0, "evaluator.");
    cfg.evaluator.builtin.stratified =
        detail::field_or<bool>(e, "stratified", false, "evaluator.");
    if (e.contains("classifier")) {
      const auto& c = e.at("classifier");
      auto& cc = cfg.evaluator.builtin.classifier;
      cc.epochs = detail::field_or<int>(c, "epochs", cc.epochs, "evaluator.classifier.");
      cc.batch_size =
          detail::field_or<int>(c, "batch_size", cc.batch_size, "evaluator.classifier.");
      cc.learning_rate = detail::field_or<double>(c, "learning_rate", cc.learning_rate,
                                                  "evaluator.classifier.");
      cc.l2 = detail::field_or<double>(c, "l2", cc.l2, "evaluator.classifier.");
    }
    cfg.search.dataset_id = cfg.evaluator.builtin.dataset.path;
    cfg.search.model_id = "builtin-logreg";
  } else if (cfg.evaluator.type == "external") {
    cfg.evaluator.command = detail::field_or<std::string>(e, "command", "", "evaluator.");
    if (cfg.evaluator.command.empty()) {
      throw ConfigError(origin + ": external evaluator needs a 'command'");
    }
    cfg.evaluator.timeout_s =
        detail::field_or<double>(e, "timeout_s", 300.0, "evaluator.");
    cfg.search.dataset_id = "external";
    cfg.search.model_id = cfg.evaluator.command;
  } else {
    throw ConfigError(origin + ": evaluator.type must be one of synthetic|builtin|external, got '" +
                      cfg.evaluator.type + "'");
  }
  cfg.search.validate();
  return cfg;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
  return config_from_json(j, path);
}

/// Canonical JSON form: every field materialized, so dump(load(x)) is a
/// fixed point.
inline nlohmann::ordered_json config_to_json(const AppConfig& cfg) {
  nlohmann::ordered_json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["parallel"] = cfg.parallel;
  j["magnitude_table"] = cfg.magnitude_table;
  j["search"] = {{"runs", cfg.search.runs},
                 {"init", cfg.search.init_num},
                 {"iters", cfg.search.iter_num},
                 {"sub_policies", cfg.search.sub_policies_per_policy},
                 {"mcmc",
                  {{"burn_in", cfg.search.mcmc.burn_in},
                   {"thinning", cfg.search.mcmc.thinning},
                   {"samples", cfg.search.mcmc.samples},
                   {"width", cfg.search.mcmc.width}}},
                 {"cma",
                  {{"max_evals", cfg.search.cma.max_evals},
                   {"restarts", cfg.search.cma.restarts}}}};
  nlohmann::ordered_json e;
  e["type"] = cfg.evaluator.type;
  if (cfg.evaluator.type == "synthetic") {
    e["name"] = cfg.evaluator.name;
  } else if (cfg.evaluator.type == "builtin") {
    e["dataset"] = {{"format", cfg.evaluator.builtin.dataset.format},
                    {"path", cfg.evaluator.builtin.dataset.path}};
    e["train_n"] = cfg.evaluator.builtin.train_n;
    e["val_n"] = cfg.evaluator.builtin.val_n;
    e["stratified"] = cfg.evaluator.builtin.stratified;
    e["classifier"] = {{"epochs", cfg.evaluator.builtin.classifier.epochs},
                       {"batch_size", cfg.evaluator.builtin.classifier.batch_size},
                       {"learning_rate", cfg.evaluator.builtin.classifier.learning_rate},
                       {"l2", cfg.evaluator.builtin.classifier.l2}};
  } else {
    e["command"] = cfg.evaluator.command;
    e["timeout_s"] = cfg.evaluator.timeout_s;
  }
  j["evaluator"] = std::move(e);
  return j;
}

/// Load the builtin evaluator's dataset and produce the reduced search split.
inline std::pair<std::shared_ptr<const data::LabeledDataset>,
                 std::shared_ptr<const data::LabeledDataset>>
load_builtin_split(const AppConfig& cfg) {
  const auto& spec = cfg.evaluator.builtin;
  data::LabeledDataset full = spec.dataset.format == "cifar10"
                                  ? data::load_cifar10_binary(spec.dataset.path)
                                  : data::load_image_dir(spec.dataset.path);
  auto [train, val] =
      data::make_reduced_split(full, spec.train_n, spec.effective_val_n(),
                               mix64(cfg.seed, detail::kSplitTag), spec.stratified);
  return {std::make_shared<const data::LabeledDataset>(std::move(train)),
          std::make_shared<const data::LabeledDataset>(std::move(val))};
}

/// Per-run evaluator factory for run_search. Builtin datasets are loaded
/// once up front and shared read-only across runs.
inline search::EvaluatorFactory make_evaluator_factory(const AppConfig& cfg) {
  if (cfg.evaluator.type == "synthetic") {
    std::string name = cfg.evaluator.name;
    eval::synthetic_value(name, policy::PolicyVector(cfg.search.dims(), 0.0));
    return [name](int) { return std::make_unique<eval::SyntheticEvaluator>(name); };
  }
  if (cfg.evaluator.type == "builtin") {
    auto [train, val] = load_builtin_split(cfg);
    auto classifier = cfg.evaluator.builtin.classifier;
    std::uint64_t base = mix64(cfg.seed, detail::kEvalTag);
    return [train = train, val = val, classifier, base](int run) {
      return std::make_unique<eval::BuiltinEvaluator>(train, val, classifier,
                                                      mix64(base, run));
    };
  }
  std::string command = cfg.evaluator.command;
  double timeout = cfg.evaluator.timeout_s;
  return [command, timeout](int) {
    return std::make_unique<eval::ExternalEvaluator>(command, timeout);
  };
}

}  // namespace boaug::app

#endif  // BOAUG_APP_CONFIG_HPP_
