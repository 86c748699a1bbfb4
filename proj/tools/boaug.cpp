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
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "boaug/app_config.hpp"
#include "boaug/dataset.hpp"
#include "boaug/errors.hpp"
#include "boaug/evaluator.hpp"
#include "boaug/image_ops.hpp"
#include "boaug/log.hpp"
#include "boaug/png_io.hpp"
#include "boaug/policy.hpp"
#include "boaug/search.hpp"

namespace fs = std::filesystem;
using namespace boaug;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEvaluator = 3;
constexpr int kExitNumerical = 4;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void apply_evaluator_override(app::AppConfig& cfg, const std::string& spec) {
  if (spec.rfind("synthetic:", 0) == 0) {
    cfg.evaluator.type = "synthetic";
    cfg.evaluator.name = spec.substr(10);
    eval::synthetic_value(cfg.evaluator.name, policy::PolicyVector(cfg.search.dims(), 0.0));
    cfg.search.dataset_id = "synthetic:" + cfg.evaluator.name;
    cfg.search.model_id = "analytic";
  } else if (spec == "builtin") {
    if (cfg.evaluator.builtin.dataset.path.empty()) {
      throw ConfigError("--evaluator builtin needs dataset paths in the config file");
    }
    cfg.evaluator.type = "builtin";
    cfg.search.dataset_id = cfg.evaluator.builtin.dataset.path;
    cfg.search.model_id = "builtin-logreg";
  } else if (spec.rfind("extern:", 0) == 0) {
    cfg.evaluator.type = "external";
    cfg.evaluator.command = spec.substr(7);
    if (cfg.evaluator.command.empty()) throw ConfigError("extern: needs a command");
    cfg.search.dataset_id = "external";
    cfg.search.model_id = cfg.evaluator.command;
  } else {
    throw ConfigError("bad --evaluator value: " + spec +
                      " (expected synthetic:<name>|builtin|extern:\"<cmd>\")");
  }
}

int failure_exit_code(const search::SearchResult& result) {
  for (const auto& h : result.histories) {
    switch (h.failure) {
      case search::FailureKind::kProtocol:
      case search::FailureKind::kEvaluation:
        return kExitEvaluator;
      case search::FailureKind::kNumerical:
        return kExitNumerical;
      case search::FailureKind::kOther:
        return 1;
      case search::FailureKind::kNone:
        break;
    }
  }
  return 1;
}

int cmd_search(const std::string& config_path, int runs, int init, int iters, long seed,
               int parallel, const std::string& evaluator_spec) {
  app::AppConfig cfg = app::load_config(config_path);
  if (runs > 0) cfg.search.runs = runs;
  if (init > 0) cfg.search.init_num = init;
  if (iters >= 0) cfg.search.iter_num = iters;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (parallel > 0) cfg.parallel = parallel;
  if (!evaluator_spec.empty()) apply_evaluator_override(cfg, evaluator_spec);
  cfg.search.validate();

  fs::create_directories(cfg.output_dir);
  auto run_path = [&](int run) {
    return (fs::path(cfg.output_dir) / ("run_" + std::to_string(run) + ".jsonl")).string();
  };
  auto hyper_path = [&](int run) {
    return (fs::path(cfg.output_dir) / ("run_" + std::to_string(run) + "_hyper.jsonl")).string();
  };

  auto factory = app::make_evaluator_factory(cfg);
  search::SinkFactory sinks = [&](int run) -> std::unique_ptr<search::CheckpointSink> {
    return std::make_unique<search::JsonlCheckpoint>(run_path(run), hyper_path(run), run);
  };
  search::ResumeProvider resume = [&](int run) {
    auto records = search::load_checkpoint(run_path(run));
    if (!records.empty()) {
      log::info("run " + std::to_string(run) + ": resuming from " +
                std::to_string(records.size()) + " checkpointed evaluations");
    }
    return records;
  };

  auto t0 = std::chrono::steady_clock::now();
  search::SearchResult result =
      search::run_search(factory, cfg.search, cfg.seed, cfg.parallel, sinks, resume);
  double total_elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // policies.json: pooled incumbents in the policy JSON schema.
  {
    std::ofstream out(fs::path(cfg.output_dir) / "policies.json");
    out << policy::policy_set_to_json(result.policies).dump(2) << "\n";
  }

  nlohmann::ordered_json summary;
  summary["runs"] = cfg.search.runs;
  summary["init"] = cfg.search.init_num;
  summary["iters"] = cfg.search.iter_num;
  long evaluations = 0;
  double eval_elapsed = 0.0;
  nlohmann::json incumbents = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& h : result.histories) {
    evaluations += static_cast<long>(h.records.size());
    for (const auto& r : h.records) eval_elapsed += r.elapsed_s;
    if (h.complete) {
      const auto& inc = h.incumbent();
      incumbents.push_back({{"run", h.run_index},
                            {"iter", inc.iter},
                            {"error", inc.error},
                            {"policy_raw", inc.policy_raw}});
    } else if (h.failure != search::FailureKind::kNone) {
      static const char* names[] = {"none", "evaluation", "protocol", "numerical", "other"};
      failures.push_back({{"run", h.run_index},
                          {"kind", names[static_cast<int>(h.failure)]},
                          {"message", h.failure_message}});
    }
  }
  summary["evaluations"] = evaluations;
  summary["complete"] = result.complete;
  summary["incumbents"] = std::move(incumbents);
  if (!failures.empty()) summary["failures"] = std::move(failures);
  summary["eval_elapsed_s"] = eval_elapsed;
  summary["total_elapsed_s"] = total_elapsed;
  {
    std::ofstream out(fs::path(cfg.output_dir) / "summary.json");
    out << summary.dump(2) << "\n";
  }

  if (!result.complete) {
    std::cerr << "search incomplete; see " << cfg.output_dir << "/summary.json\n";
    return failure_exit_code(result);
  }
  std::cout << "search complete: " << evaluations << " evaluations, policies at "
            << (fs::path(cfg.output_dir) / "policies.json").string() << "\n";
  return kExitOk;
}

int cmd_apply(const std::string& policies_path, const std::string& in_dir,
              const std::string& out_dir, int count, long seed) {
  if (count < 1) throw ConfigError("--count must be >= 1");
  std::ifstream in(policies_path);
  if (!in) throw ConfigError("cannot open policies file: " + policies_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(policies_path + ": not valid JSON: " + e.what());
  }
  auto pool = policy::sub_policy_pool(policy::policy_set_from_json(doc));
  if (pool.empty()) throw FormatError(policies_path + ": no sub-policies");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no PNG files in " + in_dir);
  fs::create_directories(out_dir);

  std::vector<img::Image> batch;
  batch.reserve(files.size() * static_cast<size_t>(count));
  for (const auto& f : files) {
    img::Image image = img::read_png(f.string());
    for (int k = 0; k < count; ++k) batch.push_back(image);
  }
  auto augmented =
      img::augment_batch(batch, pool, RngStream(static_cast<std::uint64_t>(seed)));
  for (size_t i = 0; i < files.size(); ++i) {
    for (int k = 0; k < count; ++k) {
      fs::path out = fs::path(out_dir) /
                     (files[i].stem().string() + "_aug" + std::to_string(k) + ".png");
      img::write_png(out.string(), augmented[i * static_cast<size_t>(count) +
                                             static_cast<size_t>(k)]);
    }
  }
  std::cout << "wrote " << files.size() * static_cast<size_t>(count) << " images to "
            << out_dir << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& policies_path, const std::string& config_path, long seed) {
  app::AppConfig cfg = app::load_config(config_path);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (cfg.evaluator.type != "builtin") {
    throw ConfigError("eval needs a config with a builtin evaluator (got '" +
                      cfg.evaluator.type + "')");
  }
  std::ifstream in(policies_path);
  if (!in) throw ConfigError("cannot open policies file: " + policies_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(policies_path + ": not valid JSON: " + e.what());
  }
  auto pool = policy::sub_policy_pool(policy::policy_set_from_json(doc));
  if (pool.empty()) throw FormatError(policies_path + ": no sub-policies");

  auto [train, val] = app::load_builtin_split(cfg);
  std::uint64_t train_seed = mix64(cfg.seed, app::detail::kEvalTag);
  double augmented = eval::train_and_validate(*train, *val, pool,
                                              cfg.evaluator.builtin.classifier, train_seed);
  double baseline = eval::train_and_validate(*train, *val, {},
                                             cfg.evaluator.builtin.classifier, train_seed);
  double delta = augmented - baseline;
  std::cout << "augmented_error " << format_real(augmented) << "\n"
            << "baseline_error " << format_real(baseline) << "\n"
            << "delta " << (delta >= 0 ? "+" : "") << format_real(delta) << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& suite, int seeds, int budget, const std::string& out_csv,
              long seed_base) {
  const auto& names = eval::synthetic_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw ConfigError("unknown suite: " + suite);
  }
  if (seeds < 1 || budget < 1) throw ConfigError("--seeds and --budget must be >= 1");

  std::ofstream csv(out_csv);
  if (!csv) throw ConfigError("cannot open CSV for writing: " + out_csv);
  csv << "method,seed,iter,value,best_so_far\n";

  search::SearchConfig cfg;
  cfg.runs = 1;
  cfg.init_num = std::min(10, budget);
  cfg.iter_num = budget - cfg.init_num;
  cfg.dataset_id = "synthetic:" + suite;
  cfg.model_id = "analytic";

  for (int s = 0; s < seeds; ++s) {
    std::uint64_t master = static_cast<std::uint64_t>(seed_base) + static_cast<std::uint64_t>(s);
    eval::SyntheticEvaluator evaluator(suite);
    auto history = search::run_single_bo(evaluator, cfg, master);
    if (!history.complete) throw EvaluationError("benchmark run failed: " + history.failure_message);
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < history.records.size(); ++i) {
      best = std::min(best, history.records[i].error);
      csv << "bo," << s << "," << i << "," << format_real(history.records[i].error) << ","
          << format_real(best) << "\n";
    }

    RngStream rng(mix64(master, 0x52414e44));
    double rs_best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < budget; ++i) {
      std::vector<double> u(cfg.dims());
      for (auto& v : u) v = rng.next_double();
      double value = eval::synthetic_value(suite, policy::denormalize_from_unit(u));
      rs_best = std::min(rs_best, value);
      csv << "random," << s << "," << i << "," << format_real(value) << ","
          << format_real(rs_best) << "\n";
    }
  }
  std::cout << "wrote " << out_csv << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-augmentation policy search via Bayesian optimization"};
  app.require_subcommand(1);

  auto* search_cmd = app.add_subcommand("search", "search for augmentation policies");
  std::string config_path, evaluator_spec;
  int runs = -1, init = -1, iters = -1, parallel = -1;
  long seed = -1;
  search_cmd->add_option("--config", config_path, "config JSON path")->required();
  search_cmd->add_option("--runs", runs, "number of independent BO runs");
  search_cmd->add_option("--init", init, "initial random evaluations per run");
  search_cmd->add_option("--iters", iters, "BO iterations per run");
  search_cmd->add_option("--seed", seed, "master seed");
  search_cmd->add_option("--parallel", parallel, "worker threads for independent runs");
  search_cmd->add_option("--evaluator", evaluator_spec,
                         "synthetic:<name>|builtin|extern:\"<cmd>\"");

  auto* apply_cmd = app.add_subcommand("apply", "apply a policy file to images");
  std::string policies_path, in_dir, out_dir;
  int count = 1;
  long apply_seed = 0;
  apply_cmd->add_option("--policies", policies_path, "policy JSON path")->required();
  apply_cmd->add_option("--in", in_dir, "input directory of PNG files")->required();
  apply_cmd->add_option("--out", out_dir, "output directory")->required();
  apply_cmd->add_option("--count", count, "augmented variants per input image");
  apply_cmd->add_option("--seed", apply_seed, "seed");

  auto* eval_cmd = app.add_subcommand("eval", "score a policy file with the builtin classifier");
  std::string eval_policies, eval_config;
  long eval_seed = -1;
  eval_cmd->add_option("--policies", eval_policies, "policy JSON path")->required();
  eval_cmd->add_option("--config", eval_config, "config JSON path (builtin evaluator)")->required();
  eval_cmd->add_option("--seed", eval_seed, "seed");

  auto* bench_cmd = app.add_subcommand("bench", "BO vs random search on a synthetic suite");
  std::string suite, out_csv = "bench.csv";
  int bench_seeds = 10, bench_budget = 100;
  long bench_seed = 0;
  bench_cmd->add_option("--suite", suite, "synthetic benchmark name")->required();
  bench_cmd->add_option("--seeds", bench_seeds, "number of seeds");
  bench_cmd->add_option("--budget", bench_budget, "evaluations per method per seed");
  bench_cmd->add_option("--out", out_csv, "output CSV path");
  bench_cmd->add_option("--seed", bench_seed, "base seed");

  try {
    app.parse(argc, argv);
    if (search_cmd->parsed()) {
      return cmd_search(config_path, runs, init, iters, seed, parallel, evaluator_spec);
    }
    if (apply_cmd->parsed()) {
      return cmd_apply(policies_path, in_dir, out_dir, count, apply_seed);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_policies, eval_config, eval_seed);
    if (bench_cmd->parsed()) {
      return cmd_bench(suite, bench_seeds, bench_budget, out_csv, bench_seed);
    }
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
