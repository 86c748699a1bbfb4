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
#ifndef BOAUG_SEARCH_HPP_
#define BOAUG_SEARCH_HPP_

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "boaug/acquisition.hpp"
#include "boaug/cmaes.hpp"
#include "boaug/errors.hpp"
#include "boaug/evaluator.hpp"
#include "boaug/gp.hpp"
#include "boaug/log.hpp"
#include "boaug/policy.hpp"
#include "boaug/rng.hpp"

namespace boaug::search {

struct McmcSettings {
  int burn_in = 50;
  int thinning = 5;
  int samples = 10;
  double width = 2.0;
};

struct CmaSettings {
  long max_evals = 2000;
  int restarts = 2;
};

struct SearchConfig {
  int init_num = 10;
  int iter_num = 90;
  int runs = 8;
  int sub_policies_per_policy = 3;
  McmcSettings mcmc;
  CmaSettings cma;
  policy::MagnitudeTable ranges = policy::MagnitudeTable::stock();
  std::string dataset_id = "default";
  std::string model_id = "default";

  int dims() const { return policy::kSubPolicyDims * sub_policies_per_policy; }
  long budget_per_run() const { return static_cast<long>(init_num) + iter_num; }

  void validate() const {
    if (init_num < 1) throw ConfigError("init_num must be >= 1");
    if (iter_num < 0) throw ConfigError("iter_num must be >= 0");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (sub_policies_per_policy < 1) throw ConfigError("sub_policies_per_policy must be >= 1");
    if (mcmc.samples < 1) throw ConfigError("mcmc samples must be >= 1");
  }
};

/// One completed evaluation, as persisted in the checkpoint.
struct EvalRecord {
  int run = 0;
  int iter = 0;  // global evaluation index within the run
  policy::PolicyVector policy_raw;
  double error = 0.0;
  double elapsed_s = 0.0;
};

enum class FailureKind { kNone, kEvaluation, kProtocol, kNumerical, kOther };

struct RunHistory {
  int run_index = 0;
  std::vector<EvalRecord> records;
  /// Optimizer output before box clamping, aligned with records.
  std::vector<policy::PolicyVector> preclamp;
  /// MCMC hyperparameter samples per BO iteration actually executed here.
  std::vector<std::vector<gp::KernelHyperparams>> hyper_log;
  bool complete = false;
  FailureKind failure = FailureKind::kNone;
  std::string failure_message;

  /// Index of the best (lowest-error) record; earliest wins ties.
  int incumbent_index() const {
    if (records.empty()) throw DomainError("empty run history has no incumbent");
    int best = 0;
    for (size_t i = 1; i < records.size(); ++i) {
      if (records[i].error < records[best].error) best = static_cast<int>(i);
    }
    return best;
  }

  const EvalRecord& incumbent() const { return records[incumbent_index()]; }

  std::vector<double> best_so_far() const {
    std::vector<double> out;
    out.reserve(records.size());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      best = std::min(best, r.error);
      out.push_back(best);
    }
    return out;
  }
};

// --- Checkpointing ----------------------------------------------------------

class CheckpointSink {
 public:
  virtual ~CheckpointSink() = default;
  virtual void on_record(const EvalRecord& record) = 0;
  virtual void on_hyper_samples(int /*iter*/,
                                const std::vector<gp::KernelHyperparams>& /*samples*/) {}
};

inline nlohmann::ordered_json record_to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["run"] = r.run;
  j["iter"] = r.iter;
  j["policy_raw"] = r.policy_raw;
  j["error"] = r.error;
  j["elapsed_s"] = r.elapsed_s;
  return j;
}

inline EvalRecord record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  try {
    r.run = j.at("run").get<int>();
    r.iter = j.at("iter").get<int>();
    r.policy_raw = j.at("policy_raw").get<std::vector<double>>();
    r.error = j.at("error").get<double>();
    r.elapsed_s = j.at("elapsed_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint record: ") + e.what());
  }
  return r;
}

/// Append-only JSON-lines checkpoint, one record per evaluation, flushed per
/// line so a killed process loses at most the in-flight evaluation.
/// Hyperparameter samples go to an optional sidecar file.
class JsonlCheckpoint : public CheckpointSink {
 public:
  explicit JsonlCheckpoint(const std::string& record_path, std::string hyper_path = "",
                           int run_index = 0)
      : records_(record_path, std::ios::app), hyper_path_(std::move(hyper_path)),
        run_index_(run_index) {
    if (!records_) throw ConfigError("cannot open checkpoint for append: " + record_path);
  }

  void on_record(const EvalRecord& record) override {
    records_ << record_to_json(record).dump() << "\n";
    records_.flush();
  }

  void on_hyper_samples(int iter, const std::vector<gp::KernelHyperparams>& samples) override {
    if (hyper_path_.empty()) return;
    if (!hyper_) {
      hyper_.emplace(hyper_path_, std::ios::app);
      if (!*hyper_) throw ConfigError("cannot open hyper log for append: " + hyper_path_);
    }
    nlohmann::ordered_json j;
    j["run"] = run_index_;
    j["iter"] = iter;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& hp : samples) {
      nlohmann::json s;
      s["lengthscales"] = std::vector<double>(hp.lengthscales.data(),
                                              hp.lengthscales.data() + hp.lengthscales.size());
      s["signal_variance"] = hp.signal_variance;
      s["noise_variance"] = hp.noise_variance;
      arr.push_back(std::move(s));
    }
    j["samples"] = std::move(arr);
    *hyper_ << j.dump() << "\n";
    hyper_->flush();
  }

 private:
  std::ofstream records_;
  std::string hyper_path_;
  std::optional<std::ofstream> hyper_;
  int run_index_;
};

inline std::vector<EvalRecord> load_checkpoint(const std::string& path) {
  std::vector<EvalRecord> records;
  std::ifstream in(path);
  if (!in) return records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": not a JSON record");
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

// --- The BO loop ------------------------------------------------------------

namespace detail {

inline constexpr std::uint64_t kInitTag = 0x494e4954;
inline constexpr std::uint64_t kMcmcTag = 0x4d434d43;
inline constexpr std::uint64_t kCmaTag = 0x434d4145;
inline constexpr std::uint64_t kGuardTag = 0x47554152;

/// Streams are derived from (seed, stage, iteration) only, never from how
/// many draws earlier stages consumed; this is what makes checkpoint resume
/// bit-identical to an uninterrupted run.
inline RngStream stage_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return RngStream(mix64(mix64(seed, tag), index));
}

}  // namespace detail

/// One Bayesian-optimization run: init_num seeded uniform points, then
/// iter_num rounds of fit / MCMC / integrated-EI maximization / evaluate.
/// Every evaluation is checkpointed through `sink`; `resume` replays
/// previously checkpointed records instead of re-evaluating them.
///
/// Evaluator failures do not throw: the history is returned with
/// `complete == false` and the failure recorded, all completed records
/// preserved.
inline RunHistory run_single_bo(eval::Evaluator& evaluator, const SearchConfig& cfg,
                                std::uint64_t seed, int run_index = 0,
                                CheckpointSink* sink = nullptr,
                                const std::vector<EvalRecord>* resume = nullptr) {
  cfg.validate();
  const int d = cfg.dims();
  RunHistory history;
  history.run_index = run_index;

  const size_t resumed = resume ? resume->size() : 0;
  if (resumed > static_cast<size_t>(cfg.budget_per_run())) {
    throw ConfigError("checkpoint holds more records than the configured budget");
  }
  if (resumed > 0 && (*resume)[0].policy_raw.size() != static_cast<size_t>(d)) {
    throw ConfigError("checkpoint policy dimension does not match the configuration");
  }

  std::vector<std::vector<double>> X_rows;
  std::vector<double> y;
  X_rows.reserve(cfg.budget_per_run());
  y.reserve(cfg.budget_per_run());

  // Evaluates (or replays) the candidate with global index `index`.
  auto evaluate_candidate = [&](int index, const policy::PolicyVector& raw,
                                const policy::PolicyVector& pre_clamp) {
    EvalRecord rec;
    if (static_cast<size_t>(index) < resumed) {
      rec = (*resume)[static_cast<size_t>(index)];
    } else {
      eval::EvaluationRequest req;
      req.id = index;
      req.policy_raw = raw;
      req.policy = policy::decode_policy(raw, cfg.ranges);
      req.dataset_id = cfg.dataset_id;
      req.model_id = cfg.model_id;
      eval::EvaluationResult res = evaluator.evaluate(req);
      if (!std::isfinite(res.error) || res.error < 0.0 || res.error > 1.0) {
        throw EvaluationError("evaluator returned error outside [0,1]: " +
                              std::to_string(res.error));
      }
      rec = EvalRecord{run_index, index, raw, res.error, res.elapsed_s};
      if (sink) sink->on_record(rec);
    }
    history.records.push_back(rec);
    history.preclamp.push_back(pre_clamp);
    X_rows.push_back(policy::normalize_to_unit(rec.policy_raw));
    y.push_back(rec.error);
  };

  try {
    // Initial design: init_num uniform points in the normalized box.
    RngStream init_rng = detail::stage_stream(seed, detail::kInitTag, 0);
    for (int i = 0; i < cfg.init_num; ++i) {
      std::vector<double> u(d);
      for (auto& v : u) v = init_rng.next_double();
      policy::PolicyVector raw = policy::denormalize_from_unit(u);
      evaluate_candidate(i, policy::clamp_to_box(raw), raw);
    }

    for (int t = 0; t < cfg.iter_num; ++t) {
      int index = cfg.init_num + t;
      if (static_cast<size_t>(index) < resumed) {
        // Replay: surrogate work for this iteration influenced nothing but
        // the recorded candidate, which we already have.
        evaluate_candidate(index, (*resume)[static_cast<size_t>(index)].policy_raw,
                           (*resume)[static_cast<size_t>(index)].policy_raw);
        continue;
      }

      const auto n = static_cast<Eigen::Index>(X_rows.size());
      Eigen::MatrixXd X(n, d);
      Eigen::VectorXd yv(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) X(i, j) = X_rows[static_cast<size_t>(i)][j];
        yv(i) = y[static_cast<size_t>(i)];
      }

      RngStream mcmc_rng = detail::stage_stream(seed, detail::kMcmcTag, t);
      gp::SliceConfig slice_cfg;
      slice_cfg.burn_in = cfg.mcmc.burn_in;
      slice_cfg.thinning = cfg.mcmc.thinning;
      slice_cfg.width = cfg.mcmc.width;
      auto hyper_samples =
          gp::sample_hyperparams(X, yv, gp::HyperPrior{}, cfg.mcmc.samples, mcmc_rng, slice_cfg);

      std::vector<gp::GpModel> models;
      models.reserve(hyper_samples.size());
      for (const auto& hp : hyper_samples) models.push_back(gp::GpModel::fit(X, yv, hp));
      double v_star = models.front().standardize_target(
          *std::min_element(y.begin(), y.end()));

      cmaes::CmaConfig cma_cfg;
      cma_cfg.dimension = d;
      cma_cfg.max_evals = cfg.cma.max_evals;
      cma_cfg.restarts = cfg.cma.restarts;
      RngStream cma_rng = detail::stage_stream(seed, detail::kCmaTag, t);
      auto picked = cmaes::maximize(
          [&](const Eigen::VectorXd& x) { return acq::integrated_ei(models, x, v_star); },
          cma_cfg, cma_rng);

      std::vector<double> x_norm(picked.best_x.data(), picked.best_x.data() + d);

      // Duplicate guard: a re-proposed point would degenerate the GP update.
      double closest = std::numeric_limits<double>::infinity();
      for (const auto& row : X_rows) {
        double dist = 0.0;
        for (int j = 0; j < d; ++j) dist = std::max(dist, std::abs(row[j] - x_norm[j]));
        closest = std::min(closest, dist);
      }
      if (closest < 1e-9) {
        RngStream guard_rng = detail::stage_stream(seed, detail::kGuardTag, t);
        for (auto& v : x_norm) {
          v = std::min(1.0, std::max(0.0, v + (guard_rng.next_double() - 0.5) * 1e-3));
        }
        log::debug("duplicate candidate at iteration " + std::to_string(index) + ", perturbed");
      }

      policy::PolicyVector raw_pre = policy::denormalize_from_unit(x_norm);
      policy::PolicyVector raw = policy::clamp_to_box(raw_pre);
      evaluate_candidate(index, raw, raw_pre);

      history.hyper_log.push_back(hyper_samples);
      if (sink) sink->on_hyper_samples(index, hyper_samples);
    }
    history.complete = true;
  } catch (const ProtocolError& e) {
    history.failure = FailureKind::kProtocol;
    history.failure_message = e.what();
    log::error("run " + std::to_string(run_index) + " aborted: " + e.what());
  } catch (const EvaluationError& e) {
    history.failure = FailureKind::kEvaluation;
    history.failure_message = e.what();
    log::error("run " + std::to_string(run_index) + " aborted: " + e.what());
  } catch (const NumericalError& e) {
    history.failure = FailureKind::kNumerical;
    history.failure_message = e.what();
    log::error("run " + std::to_string(run_index) + " aborted: " + e.what());
  }
  return history;
}

// --- T independent runs -----------------------------------------------------

using EvaluatorFactory = std::function<std::unique_ptr<eval::Evaluator>(int run_index)>;
using SinkFactory = std::function<std::unique_ptr<CheckpointSink>(int run_index)>;
using ResumeProvider = std::function<std::vector<EvalRecord>(int run_index)>;

struct SearchResult {
  policy::PolicySet policies;  // decoded incumbents of completed runs, in run order
  std::vector<RunHistory> histories;
  bool complete = false;
};

/// Run `cfg.runs` independent BO runs with seeds master_seed + run index and
/// pool the decoded incumbents. Runs may execute on up to `parallelism`
/// threads; results are independent of the thread count. A failed run stops
/// new runs from starting and yields a partial result.
inline SearchResult run_search(const EvaluatorFactory& make_evaluator, const SearchConfig& cfg,
                               std::uint64_t master_seed, int parallelism = 1,
                               const SinkFactory& make_sink = {},
                               const ResumeProvider& resume_provider = {}) {
  cfg.validate();
  SearchResult result;
  result.histories.resize(cfg.runs);

  std::atomic<int> next_run{0};
  std::atomic<bool> stop{false};

  auto worker = [&]() {
    while (!stop.load()) {
      int run = next_run.fetch_add(1);
      if (run >= cfg.runs) return;
      result.histories[run].run_index = run;
      try {
        std::uint64_t seed = master_seed + static_cast<std::uint64_t>(run);
        std::unique_ptr<eval::Evaluator> evaluator = make_evaluator(run);
        std::unique_ptr<CheckpointSink> sink = make_sink ? make_sink(run) : nullptr;
        std::vector<EvalRecord> resume;
        if (resume_provider) resume = resume_provider(run);
        log::info("run " + std::to_string(run) + " starting (seed " + std::to_string(seed) + ")");
        result.histories[run] = run_single_bo(*evaluator, cfg, seed, run, sink.get(),
                                              resume.empty() ? nullptr : &resume);
      } catch (const std::exception& e) {
        result.histories[run].complete = false;
        result.histories[run].failure = FailureKind::kOther;
        result.histories[run].failure_message = e.what();
        log::error("run " + std::to_string(run) + " failed: " + e.what());
      }
      if (!result.histories[run].complete) stop.store(true);
    }
  };

  int threads = std::max(1, std::min(parallelism, cfg.runs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.complete = true;
  for (const auto& h : result.histories) {
    if (!h.complete) result.complete = false;
  }
  for (const auto& h : result.histories) {
    if (h.complete) {
      result.policies.push_back(
          policy::decode_policy(h.incumbent().policy_raw, cfg.ranges));
    }
  }
  return result;
}

}  // namespace boaug::search

#endif  // BOAUG_SEARCH_HPP_
