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
#ifndef BOAUG_EVALUATOR_HPP_
#define BOAUG_EVALUATOR_HPP_

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "boaug/dataset.hpp"
#include "boaug/errors.hpp"
#include "boaug/image_ops.hpp"
#include "boaug/policy.hpp"
#include "boaug/rng.hpp"
#include "boaug/subprocess.hpp"

namespace boaug::eval {

/// One candidate handed to the objective: the raw search point together with
/// its decoded form and the identifiers of the data/model pair it scores.
struct EvaluationRequest {
  long id = 0;
  policy::PolicyVector policy_raw;
  policy::DecodedPolicy policy;
  std::string dataset_id;
  std::string model_id;
};

/// The observation: validation classification error in [0,1]. `elapsed_s`
/// records the real-evaluation cost; synthetic benchmarks report 0.
struct EvaluationResult {
  long id = 0;
  double error = 0.0;
  double elapsed_s = 0.0;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvaluationResult evaluate(const EvaluationRequest& request) = 0;
};

// --- Synthetic benchmarks -------------------------------------------------

namespace detail {

inline double sphere_value(const std::vector<double>& u) {
  double s = 0.0;
  for (double x : u) s += (x - 0.5) * (x - 0.5);
  return s / (0.25 * static_cast<double>(u.size()));
}

inline double branin_raw(double x1, double x2) {
  const double a = 1.0, b = 5.1 / (4.0 * M_PI * M_PI), c = 5.0 / M_PI;
  const double r = 6.0, s = 10.0, t = 1.0 / (8.0 * M_PI);
  double inner = x2 - b * x1 * x1 + c * x1 - r;
  return a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

inline double branin15_value(const std::vector<double>& u) {
  if (u.size() < 2) throw DomainError("branin15 needs at least 2 dimensions");
  double x1 = -5.0 + 15.0 * u[0];
  double x2 = 15.0 * u[1];
  const double lo = 0.39788735772973816;  // global minimum value
  const double hi = branin_raw(-5.0, 0.0);  // maximum over the domain (corner)
  double v = (branin_raw(x1, x2) - lo) / (hi - lo);
  return std::min(1.0, std::max(0.0, v));
}

/// Negative mixture of 5 Gaussians with fixed seeded centers; basins are
/// wide relative to the box so the landscape carries global structure a
/// surrogate can exploit.
struct GmmBenchmark {
  std::vector<std::vector<double>> centers;
  std::vector<double> depths{1.0, 0.75, 0.7, 0.65, 0.6};
  std::vector<double> sigmas{1.00, 0.80, 0.70, 0.60, 0.55};

  explicit GmmBenchmark(size_t dims) {
    RngStream rng(0xB0A7'6A55);
    centers.resize(depths.size());
    for (auto& c : centers) {
      c.resize(dims);
      for (auto& v : c) v = rng.next_double();
    }
  }

  double operator()(const std::vector<double>& u) const {
    double depth_total = 0.0, s = 0.0;
    for (size_t i = 0; i < centers.size(); ++i) {
      double d2 = 0.0;
      for (size_t j = 0; j < u.size(); ++j) {
        double diff = u[j] - centers[i][j];
        d2 += diff * diff;
      }
      s += depths[i] * std::exp(-d2 / (2.0 * sigmas[i] * sigmas[i]));
      depth_total += depths[i];
    }
    return 1.0 - 0.9 * s / depth_total;
  }
};

}  // namespace detail

inline const std::vector<std::string>& synthetic_names() {
  static const std::vector<std::string> names = {"sphere", "branin15", "gmm-multimodal"};
  return names;
}

/// Deterministic benchmark value in [0,1] for a raw policy vector.
inline double synthetic_value(const std::string& name, const policy::PolicyVector& raw) {
  auto u = policy::normalize_to_unit(policy::clamp_to_box(raw));
  if (name == "sphere") return detail::sphere_value(u);
  if (name == "branin15") return detail::branin15_value(u);
  if (name == "gmm-multimodal") {
    static thread_local std::unique_ptr<detail::GmmBenchmark> bench;
    if (!bench || bench->centers[0].size() != u.size()) {
      bench = std::make_unique<detail::GmmBenchmark>(u.size());
    }
    return (*bench)(u);
  }
  throw ConfigError("unknown synthetic benchmark: " + name);
}

class SyntheticEvaluator : public Evaluator {
 public:
  explicit SyntheticEvaluator(std::string name) : name_(std::move(name)) {
    synthetic_value(name_, policy::PolicyVector(policy::kDefaultPolicyDims, 0.0));
  }

  EvaluationResult evaluate(const EvaluationRequest& request) override {
    return {request.id, synthetic_value(name_, request.policy_raw), 0.0};
  }

 private:
  std::string name_;
};

// --- Built-in feedback model ----------------------------------------------

/// Multinomial logistic regression on standardized raw pixels, trained with
/// plain minibatch SGD. Small enough that a policy evaluation costs a
/// fraction of a second.
struct ClassifierConfig {
  int epochs = 8;
  int batch_size = 50;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

namespace detail {

inline Eigen::MatrixXf feature_matrix(const std::vector<img::Image>& images) {
  if (images.empty()) throw DomainError("empty image set");
  int w = images[0].width, h = images[0].height;
  Eigen::Index features = static_cast<Eigen::Index>(w) * h * img::kChannels;
  Eigen::MatrixXf X(images.size(), features + 1);  // trailing 1 for the bias
  for (size_t i = 0; i < images.size(); ++i) {
    if (images[i].width != w || images[i].height != h) {
      throw DomainError("classifier requires uniformly sized images");
    }
    img::RealImage std_img = img::standardize(images[i]);
    for (Eigen::Index f = 0; f < features; ++f) {
      X(static_cast<Eigen::Index>(i), f) = std_img.data[static_cast<size_t>(f)];
    }
    X(static_cast<Eigen::Index>(i), features) = 1.0f;
  }
  return X;
}

}  // namespace detail

/// Train on `train` (augmented per epoch by the sub-policy pool; an empty
/// pool means no augmentation) and return the validation error. Exactly
/// reproducible from (datasets, pool, cfg, seed); the augmentation stream is
/// independent of the shuffle stream, so an identity pool gives the same
/// error as no pool at all.
inline double train_and_validate(const data::LabeledDataset& train,
                                 const data::LabeledDataset& val,
                                 const std::vector<policy::DecodedSubPolicy>& pool,
                                 const ClassifierConfig& cfg, std::uint64_t seed) {
  if (train.size() == 0 || val.size() == 0) throw DomainError("empty dataset");
  if (train.class_count != val.class_count) {
    throw DomainError("train/validation class counts differ");
  }
  for (const auto& ds : {std::cref(train), std::cref(val)}) {
    for (int label : ds.get().labels) {
      if (label < 0 || label >= ds.get().class_count) {
        throw DomainError("label " + std::to_string(label) + " outside class range");
      }
    }
  }
  std::set<int> distinct(train.labels.begin(), train.labels.end());
  if (distinct.size() < 2) {
    throw DomainError("training set is degenerate: a single class");
  }

  const int classes = train.class_count;
  Eigen::MatrixXf val_X = detail::feature_matrix(val.images);
  const Eigen::Index dims = val_X.cols();

  Eigen::MatrixXf W = Eigen::MatrixXf::Zero(classes, dims);
  RngStream shuffle_rng(mix64(seed, 0x5F0));
  const std::uint64_t aug_seed = mix64(seed, 0xA06);

  std::vector<int> idx(train.size());
  const auto n = static_cast<Eigen::Index>(train.size());
  const float lr = static_cast<float>(cfg.learning_rate);
  const float l2 = static_cast<float>(cfg.l2);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Eigen::MatrixXf X;
    if (pool.empty()) {
      X = detail::feature_matrix(train.images);
    } else {
      X = detail::feature_matrix(
          img::augment_batch(train.images, pool, RngStream(mix64(aug_seed, epoch))));
    }
    if (X.cols() != dims) throw DomainError("train/validation image sizes differ");

    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    for (size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[shuffle_rng.next_below(i)]);
    }

    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXf batch(b, dims);
      Eigen::MatrixXf target = Eigen::MatrixXf::Zero(classes, b);
      for (Eigen::Index k = 0; k < b; ++k) {
        int row = idx[static_cast<size_t>(start + k)];
        batch.row(k) = X.row(row);
        target(train.labels[static_cast<size_t>(row)], k) = 1.0f;
      }
      Eigen::MatrixXf logits = W * batch.transpose();  // classes x b
      Eigen::RowVectorXf max = logits.colwise().maxCoeff();
      logits.rowwise() -= max;
      Eigen::MatrixXf probs = logits.array().exp();
      Eigen::RowVectorXf sums = probs.colwise().sum();
      probs.array().rowwise() /= sums.array();
      Eigen::MatrixXf grad =
          (probs - target) * batch / static_cast<float>(b) + l2 * W;
      W -= lr * grad;
    }
  }

  Eigen::MatrixXf val_logits = W * val_X.transpose();
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < val_logits.cols(); ++i) {
    Eigen::Index predicted;
    val_logits.col(i).maxCoeff(&predicted);
    if (predicted != val.labels[static_cast<size_t>(i)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(val_logits.cols());
}

class BuiltinEvaluator : public Evaluator {
 public:
  /// Datasets are shared read-only so parallel runs do not duplicate them.
  BuiltinEvaluator(std::shared_ptr<const data::LabeledDataset> train,
                   std::shared_ptr<const data::LabeledDataset> val, ClassifierConfig cfg,
                   std::uint64_t base_seed)
      : train_(std::move(train)), val_(std::move(val)), cfg_(cfg), base_seed_(base_seed) {}

  BuiltinEvaluator(data::LabeledDataset train, data::LabeledDataset val,
                   ClassifierConfig cfg, std::uint64_t base_seed)
      : BuiltinEvaluator(std::make_shared<const data::LabeledDataset>(std::move(train)),
                         std::make_shared<const data::LabeledDataset>(std::move(val)), cfg,
                         base_seed) {}

  EvaluationResult evaluate(const EvaluationRequest& request) override {
    auto t0 = std::chrono::steady_clock::now();
    auto pool = policy::sub_policy_pool({request.policy});
    double error = train_and_validate(*train_, *val_, pool, cfg_,
                                      mix64(base_seed_, static_cast<std::uint64_t>(request.id)));
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {request.id, error, elapsed};
  }

 private:
  std::shared_ptr<const data::LabeledDataset> train_;
  std::shared_ptr<const data::LabeledDataset> val_;
  ClassifierConfig cfg_;
  std::uint64_t base_seed_;
};

// --- External evaluator ---------------------------------------------------

/// Speaks line-delimited JSON to a child process:
///   request  {"id":<int>,"policy_raw":[<reals>],"policy":{...},"dataset":"..","model":".."}
///   response {"id":<int>,"error":<real>}
/// One request in flight at a time; the child lives for the evaluator's
/// lifetime (one child per BO run).
class ExternalEvaluator : public Evaluator {
 public:
  ExternalEvaluator(std::string command, double timeout_s)
      : command_(std::move(command)), timeout_s_(timeout_s) {
    if (timeout_s_ <= 0.0) throw ConfigError("external evaluator timeout must be positive");
  }

  EvaluationResult evaluate(const EvaluationRequest& request) override {
    if (!child_ || !child_->running()) {
      child_ = std::make_unique<LineSubprocess>(command_);
    }
    nlohmann::ordered_json req;
    req["id"] = request.id;
    req["policy_raw"] = request.policy_raw;
    req["policy"] = policy::policy_to_json(request.policy);
    req["dataset"] = request.dataset_id;
    req["model"] = request.model_id;

    auto t0 = std::chrono::steady_clock::now();
    child_->write_line(req.dump());
    std::string line = child_->read_line(static_cast<long>(timeout_s_ * 1000.0));
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError("malformed response line: " + line);
    }
    if (!resp.is_object() || !resp.contains("id") || !resp.contains("error") ||
        !resp["id"].is_number_integer() || !resp["error"].is_number()) {
      throw ProtocolError("response missing id/error fields: " + line);
    }
    long id = resp["id"].get<long>();
    double error = resp["error"].get<double>();
    if (id != request.id) {
      throw ProtocolError("response id " + std::to_string(id) + " does not match request id " +
                          std::to_string(request.id));
    }
    if (!std::isfinite(error) || error < 0.0 || error > 1.0) {
      throw ProtocolError("error value out of [0,1]: " + line);
    }
    return {id, error, elapsed};
  }

 private:
  std::string command_;
  double timeout_s_;
  std::unique_ptr<LineSubprocess> child_;
};

}  // namespace boaug::eval

#endif  // BOAUG_EVALUATOR_HPP_
