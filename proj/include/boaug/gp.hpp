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
#ifndef BOAUG_GP_HPP_
#define BOAUG_GP_HPP_

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "boaug/errors.hpp"
#include "boaug/rng.hpp"

namespace boaug::gp {

/// Matern-5/2 kernel hyperparameters with one lengthscale per dimension.
struct KernelHyperparams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-3;

  static KernelHyperparams isotropic(int dims, double lengthscale,
                                     double signal_var = 1.0, double noise_var = 1e-3) {
    KernelHyperparams hp;
    hp.lengthscales = Eigen::VectorXd::Constant(dims, lengthscale);
    hp.signal_variance = signal_var;
    hp.noise_variance = noise_var;
    return hp;
  }
};

/// k(x,x') = sigma_f^2 (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r), with
/// r^2 = sum_i (x_i - x'_i)^2 / l_i^2.
inline double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const KernelHyperparams& hp) {
  double r2 = ((a - b).array() / hp.lengthscales.array()).square().sum();
  double r = std::sqrt(r2);
  static const double kSqrt5 = std::sqrt(5.0);
  return hp.signal_variance * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * std::exp(-kSqrt5 * r);
}

namespace detail {

/// Kernel matrix from the matrix of scaled squared distances r^2.
inline Eigen::MatrixXd matern52_from_r2(const Eigen::MatrixXd& r2, double signal_variance) {
  static const double kSqrt5 = std::sqrt(5.0);
  Eigen::ArrayXXd r = r2.array().max(0.0).sqrt();
  return (signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) *
          (-kSqrt5 * r).exp())
      .matrix();
}

inline Eigen::MatrixXd scaled_sq_dists(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& lengthscales) {
  const auto n = X.rows();
  Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    Eigen::VectorXd col = X.col(d) / lengthscales(d);
    Eigen::VectorXd sq = col.array().square();
    r2.noalias() += sq * Eigen::RowVectorXd::Ones(n) +
                    Eigen::VectorXd::Ones(n) * sq.transpose() -
                    2.0 * col * col.transpose();
  }
  return r2;
}

struct Standardization {
  double mean = 0.0;
  double scale = 1.0;  // population std, floored at tiny
};

inline Standardization standardize_stats(const Eigen::VectorXd& y) {
  Standardization s;
  s.mean = y.mean();
  double var = (y.array() - s.mean).square().sum() / static_cast<double>(y.size());
  double sd = std::sqrt(var);
  s.scale = sd > 1e-12 ? sd : 1.0;
  return s;
}

/// Cholesky of K_base + (noise + jitter) I with jitter escalating from
/// 1e-10 to 1e-4 of the mean diagonal. Returns (L, jitter used).
inline std::pair<Eigen::MatrixXd, double> chol_with_jitter(const Eigen::MatrixXd& K_base,
                                                           double noise_variance) {
  const auto n = K_base.rows();
  double mean_diag = K_base.diagonal().mean();
  double jitter = 1e-10 * mean_diag;
  const double max_jitter = 1e-4 * mean_diag;
  while (true) {
    Eigen::MatrixXd K = K_base;
    K.diagonal().array() += noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
    }
    if (jitter >= max_jitter) {
      throw NumericalError("kernel matrix factorization failed at n=" + std::to_string(n) +
                           " despite jitter " + std::to_string(jitter));
    }
    jitter *= 10.0;
  }
}

inline double lml_from_chol(const Eigen::MatrixXd& L, const Eigen::VectorXd& y_std) {
  const auto n = y_std.size();
  Eigen::VectorXd alpha = L.triangularView<Eigen::Lower>().solve(y_std);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
  double log_det = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * y_std.dot(alpha) - 0.5 * log_det -
         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

}  // namespace detail

/// Fitted Gaussian-process posterior with zero prior mean. Inputs are taken
/// as-is (the search engine feeds [0,1]-normalized vectors); targets are
/// standardized internally and the stored statistics are reapplied on
/// prediction. The object is immutable once fitted.
class GpModel {
 public:
  static GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const KernelHyperparams& hp) {
    if (X.rows() < 1) throw DomainError("GP fit requires at least one observation");
    if (X.rows() != y.size()) throw DomainError("GP fit: X rows and y length differ");
    if (X.cols() != hp.lengthscales.size()) {
      throw DomainError("GP fit: lengthscale count does not match input dimension");
    }
    GpModel m;
    m.X_ = X;
    m.Xs_ = X.array().rowwise() / hp.lengthscales.transpose().array();
    m.hp_ = hp;
    m.stats_ = detail::standardize_stats(y);
    m.y_std_ = (y.array() - m.stats_.mean) / m.stats_.scale;
    Eigen::MatrixXd r2 = detail::scaled_sq_dists(X, hp.lengthscales);
    Eigen::MatrixXd K = detail::matern52_from_r2(r2, hp.signal_variance);
    auto [L, jitter] = detail::chol_with_jitter(K, hp.noise_variance);
    m.L_ = std::move(L);
    m.jitter_ = jitter;
    m.alpha_ = m.L_.triangularView<Eigen::Lower>().solve(m.y_std_);
    m.L_.transpose().triangularView<Eigen::Upper>().solveInPlace(m.alpha_);
    return m;
  }

  /// Predictive mean and variance of the latent function on the original
  /// target scale. Variance is clamped at zero from below.
  std::pair<double, double> posterior(const Eigen::VectorXd& x) const {
    auto [mean_std, var_std] = posterior_standardized(x);
    return {stats_.mean + stats_.scale * mean_std,
            stats_.scale * stats_.scale * var_std};
  }

  /// Predictive moments on the internal standardized scale (the scale the
  /// acquisition operates on).
  std::pair<double, double> posterior_standardized(const Eigen::VectorXd& x) const {
    static const double kSqrt5 = std::sqrt(5.0);
    Eigen::VectorXd xs = x.cwiseQuotient(hp_.lengthscales);
    Eigen::VectorXd k_star =
        (Xs_.rowwise() - xs.transpose()).rowwise().squaredNorm();
    // In place: k_star holds r^2, then the kernel values.
    for (Eigen::Index i = 0; i < k_star.size(); ++i) {
      double r2 = k_star(i);
      double r = std::sqrt(r2);
      k_star(i) = hp_.signal_variance * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) *
                  std::exp(-kSqrt5 * r);
    }
    double mean = k_star.dot(alpha_);
    L_.triangularView<Eigen::Lower>().solveInPlace(k_star);
    double var = hp_.signal_variance - k_star.squaredNorm();
    return {mean, std::max(0.0, var)};
  }

  /// Map an original-scale target value onto the standardized scale.
  double standardize_target(double value) const {
    return (value - stats_.mean) / stats_.scale;
  }

  const Eigen::MatrixXd& inputs() const { return X_; }
  const KernelHyperparams& hyperparams() const { return hp_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& factor() const { return L_; }
  double noise_plus_jitter() const { return hp_.noise_variance + jitter_; }

 private:
  GpModel() = default;

  Eigen::MatrixXd X_;
  Eigen::MatrixXd Xs_;  // X with columns divided by their lengthscales
  Eigen::VectorXd y_std_;
  detail::Standardization stats_;
  KernelHyperparams hp_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Log marginal likelihood of the standardized targets under hp:
/// -1/2 y^T K^-1 y - 1/2 log|K| - n/2 log 2pi, K including noise and jitter.
inline double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      const KernelHyperparams& hp) {
  if (X.rows() < 1) throw DomainError("LML requires at least one observation");
  auto stats = detail::standardize_stats(y);
  Eigen::VectorXd y_std = (y.array() - stats.mean) / stats.scale;
  Eigen::MatrixXd r2 = detail::scaled_sq_dists(X, hp.lengthscales);
  Eigen::MatrixXd K = detail::matern52_from_r2(r2, hp.signal_variance);
  auto [L, jitter] = detail::chol_with_jitter(K, hp.noise_variance);
  (void)jitter;
  return detail::lml_from_chol(L, y_std);
}

/// Independent log-normal priors over the positive hyperparameters,
/// parameterized by median and log-space standard deviation.
struct LogNormalPrior {
  double log_median;
  double log_sd;

  /// Density of theta = log(param); the log-normal's Jacobian cancels, so
  /// this is a plain normal log-density up to a constant.
  double logpdf_log(double theta) const {
    double z = (theta - log_median) / log_sd;
    return -0.5 * z * z;
  }
};

struct HyperPrior {
  LogNormalPrior lengthscale{std::log(0.3), 1.0};
  LogNormalPrior signal_variance{0.0, 1.0};
  LogNormalPrior noise_variance{std::log(1e-3), 1.5};
  bool flat = false;

  static HyperPrior flat_prior() {
    HyperPrior p;
    p.flat = true;
    return p;
  }
};

struct SliceConfig {
  int burn_in = 50;
  int thinning = 5;
  double width = 2.0;  // slice window width in log space
  int max_shrink = 64;
};

namespace detail {

/// Posterior evaluation state for the slice sampler. Caches per-dimension
/// squared-distance matrices so a single-coordinate lengthscale move costs
/// one rank-style update of the scaled-distance matrix instead of a full
/// rebuild.
class HyperPosterior {
 public:
  HyperPosterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const HyperPrior& prior)
      : dims_(static_cast<int>(X.cols())), prior_(prior) {
    auto stats = standardize_stats(y);
    y_std_ = (y.array() - stats.mean) / stats.scale;
    dim_sq_.reserve(dims_);
    for (int d = 0; d < dims_; ++d) {
      Eigen::VectorXd col = X.col(d);
      Eigen::VectorXd sq = col.array().square();
      Eigen::MatrixXd m = sq * Eigen::RowVectorXd::Ones(X.rows()) +
                          Eigen::VectorXd::Ones(X.rows()) * sq.transpose() -
                          2.0 * col * col.transpose();
      dim_sq_.push_back(m.array().max(0.0).matrix());
    }
    r2_ = Eigen::MatrixXd::Zero(X.rows(), X.rows());
  }

  int param_count() const { return dims_ + 2; }

  /// theta holds log lengthscales, then log signal variance, log noise
  /// variance. Establishes the cached r2 for the given lengthscales.
  void reset(const Eigen::VectorXd& theta) {
    theta_ = theta;
    r2_.setZero();
    for (int d = 0; d < dims_; ++d) {
      r2_ += dim_sq_[d] * std::exp(-2.0 * theta_(d));
    }
  }

  double log_posterior_current() { return log_posterior_at(theta_); }

  /// Log posterior with coordinate `coord` replaced by `value`, leaving the
  /// cached state at the current point.
  double log_posterior_coord(int coord, double value) {
    double old = theta_(coord);
    bool is_ls = coord < dims_;
    if (is_ls) {
      r2_ += dim_sq_[coord] * (std::exp(-2.0 * value) - std::exp(-2.0 * old));
    }
    theta_(coord) = value;
    double lp = log_posterior_at(theta_);
    if (is_ls) {
      r2_ += dim_sq_[coord] * (std::exp(-2.0 * old) - std::exp(-2.0 * value));
    }
    theta_(coord) = old;
    return lp;
  }

  /// Move the cached state to the given coordinate value (already evaluated).
  void commit_coord(int coord, double value) {
    if (coord < dims_) {
      r2_ += dim_sq_[coord] * (std::exp(-2.0 * value) - std::exp(-2.0 * theta_(coord)));
    }
    theta_(coord) = value;
  }

  KernelHyperparams to_hyperparams() const { return hyperparams_from(theta_); }

  KernelHyperparams hyperparams_from(const Eigen::VectorXd& theta) const {
    KernelHyperparams hp;
    hp.lengthscales = theta.head(dims_).array().exp();
    hp.signal_variance = std::exp(theta(dims_));
    hp.noise_variance = std::exp(theta(dims_ + 1));
    return hp;
  }

 private:
  /// Hot path for the sampler: all buffers preallocated, no temporaries
  /// beyond Eigen expression evaluation into members.
  double log_posterior_at(const Eigen::VectorXd& theta) {
    static const double kSqrt5 = std::sqrt(5.0);
    double signal_variance = std::exp(theta(dims_));
    double noise_variance = std::exp(theta(dims_ + 1));

    auto r2c = r2_.array().max(0.0);
    r_buf_ = r2c.sqrt();
    K_ = (signal_variance * (1.0 + kSqrt5 * r_buf_ + (5.0 / 3.0) * r2c) *
          (-kSqrt5 * r_buf_).exp())
             .matrix();

    double jitter = 1e-10 * signal_variance;
    const double max_jitter = 1e-4 * signal_variance;
    while (true) {
      K_.diagonal().setConstant(signal_variance + noise_variance + jitter);
      llt_.compute(K_);
      if (llt_.info() == Eigen::Success) break;
      if (jitter >= max_jitter) return -std::numeric_limits<double>::infinity();
      jitter *= 10.0;
    }
    v_ = y_std_;
    llt_.matrixL().solveInPlace(v_);
    double log_det = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    double lml = -0.5 * v_.squaredNorm() - 0.5 * log_det -
                 0.5 * static_cast<double>(y_std_.size()) * std::log(2.0 * M_PI);

    if (prior_.flat) return lml;
    double lp = 0.0;
    for (int d = 0; d < dims_; ++d) lp += prior_.lengthscale.logpdf_log(theta(d));
    lp += prior_.signal_variance.logpdf_log(theta(dims_));
    lp += prior_.noise_variance.logpdf_log(theta(dims_ + 1));
    return lml + lp;
  }

  int dims_;
  HyperPrior prior_;
  Eigen::VectorXd y_std_;
  std::vector<Eigen::MatrixXd> dim_sq_;
  Eigen::MatrixXd r2_;
  Eigen::VectorXd theta_;
  Eigen::ArrayXXd r_buf_;
  Eigen::MatrixXd K_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd v_;
};

/// One shrinkage slice-sampling update of a single coordinate (Neal 2003,
/// fixed window, no step-out). Width zero degenerates to a no-op.
template <typename LogDensityFn>
double slice_update(double x0, double log_p0, LogDensityFn&& logp, double width,
                    int max_shrink, RngStream& rng, double* log_p_out) {
  *log_p_out = log_p0;
  if (width <= 0.0) return x0;
  double log_y = log_p0 + std::log(1.0 - rng.next_double());  // log of u * p0, u in (0,1]
  double u = rng.next_double();
  double lo = x0 - width * u;
  double hi = x0 + width * (1.0 - u);
  for (int it = 0; it < max_shrink; ++it) {
    double x1 = lo + rng.next_double() * (hi - lo);
    double lp = logp(x1);
    if (lp > log_y) {
      *log_p_out = lp;
      return x1;
    }
    if (x1 < x0) {
      lo = x1;
    } else {
      hi = x1;
    }
  }
  return x0;
}

}  // namespace detail

/// Slice-sample kernel hyperparameters from LML + log prior, coordinate-wise
/// in log space. Returns `n_samples` states after burn-in and thinning.
/// Deterministic for a given rng seed.
inline std::vector<KernelHyperparams> sample_hyperparams(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const HyperPrior& prior,
    int n_samples, RngStream& rng, const SliceConfig& cfg = {}) {
  if (n_samples < 1) throw DomainError("sample_hyperparams: n_samples must be >= 1");
  detail::HyperPosterior post(X, y, prior);

  // Chain starts at the prior medians.
  Eigen::VectorXd theta(post.param_count());
  for (int d = 0; d < post.param_count() - 2; ++d) theta(d) = prior.lengthscale.log_median;
  theta(post.param_count() - 2) = prior.signal_variance.log_median;
  theta(post.param_count() - 1) = prior.noise_variance.log_median;
  post.reset(theta);
  double log_p = post.log_posterior_current();

  auto sweep = [&]() {
    for (int c = 0; c < post.param_count(); ++c) {
      double next = detail::slice_update(
          theta(c), log_p, [&](double v) { return post.log_posterior_coord(c, v); },
          cfg.width, cfg.max_shrink, rng, &log_p);
      if (next != theta(c)) {
        post.commit_coord(c, next);
        theta(c) = next;
      }
    }
  };

  for (int b = 0; b < cfg.burn_in; ++b) sweep();
  std::vector<KernelHyperparams> samples;
  samples.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    for (int t = 0; t < cfg.thinning; ++t) sweep();
    samples.push_back(post.hyperparams_from(theta));
  }
  return samples;
}

}  // namespace boaug::gp

#endif  // BOAUG_GP_HPP_
