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
#ifndef BOAUG_CMAES_HPP_
#define BOAUG_CMAES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "boaug/errors.hpp"
#include "boaug/rng.hpp"

namespace boaug::cmaes {

struct CmaConfig {
  int dimension = 15;
  int population = 0;   // 0 -> 4 + floor(3 ln d)
  double sigma0 = 0.3;  // initial step size as a fraction of the box width
  long max_evals = 2000;
  int restarts = 3;  // additional restarts, each with doubled population

  int effective_population() const {
    return population > 0
               ? population
               : 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
  }
};

struct CmaResult {
  Eigen::VectorXd best_x;
  double best_f = -std::numeric_limits<double>::infinity();
  long evaluations = 0;
};

namespace detail {

/// Strategy constants for one run; the canonical defaults of the standard
/// (mu/mu_w, lambda) strategy with weighted recombination.
struct Strategy {
  int lambda;
  int mu;
  Eigen::VectorXd weights;
  double mu_eff;
  double c_sigma, d_sigma, c_c, c_1, c_mu;
  double chi_n;

  Strategy(int dim, int lam) : lambda(lam), mu(lam / 2) {
    double n = dim;
    weights.resize(mu);
    for (int i = 0; i < mu; ++i) {
      weights(i) = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
    }
    weights /= weights.sum();
    mu_eff = 1.0 / weights.squaredNorm();
    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma;
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
    c_mu = std::min(1.0 - c_1,
                    2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
    chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  }
};

}  // namespace detail

/// Maximize f over the unit box [0,1]^d with CMA-ES.
///
/// Candidates falling outside the box are resampled up to 10 times, then
/// clamped coordinate-wise, so every point handed to f is feasible. Restarts
/// draw a fresh uniform mean and double the population; the best evaluated
/// point across all restarts is returned. Deterministic per rng seed.
inline CmaResult maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                          const CmaConfig& cfg, RngStream& rng) {
  const int n = cfg.dimension;
  if (n < 1) throw DomainError("CMA-ES dimension must be >= 1");
  if (cfg.sigma0 <= 0.0) throw DomainError("CMA-ES sigma0 must be positive");

  CmaResult result;
  result.best_x = Eigen::VectorXd::Constant(n, 0.5);
  const int total_runs = cfg.restarts + 1;

  for (int run = 0; run < total_runs && result.evaluations < cfg.max_evals; ++run) {
    // Each run terminates on its own criteria (step collapse, ill
    // conditioning, stagnation); unused budget rolls into the next restart.
    long run_budget = cfg.max_evals - result.evaluations;

    detail::Strategy st(n, cfg.effective_population() << run);
    if (st.lambda < 4) throw DomainError("CMA-ES population must be >= 4");

    Eigen::VectorXd mean(n);
    for (int i = 0; i < n; ++i) mean(i) = rng.next_double();
    double sigma = cfg.sigma0;
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd p_sigma = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd p_c = Eigen::VectorXd::Zero(n);
    long run_evals = 0;
    int generation = 0;
    double run_best = -std::numeric_limits<double>::infinity();
    int stagnation = 0;
    const int stagnation_limit = 10 + (30 * n + st.lambda - 1) / st.lambda;

    std::vector<Eigen::VectorXd> xs(st.lambda);
    std::vector<double> fs(st.lambda);
    std::vector<int> order(st.lambda);

    while (run_evals < run_budget) {
      // Eigendecomposition of C, with eigenvalue repair.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
      Eigen::VectorXd evals = eig.eigenvalues();
      const Eigen::MatrixXd& B = eig.eigenvectors();
      double max_eval = evals.maxCoeff();
      evals = evals.cwiseMax(1e-14 * max_eval);
      Eigen::VectorXd D = evals.cwiseSqrt();
      Eigen::MatrixXd inv_sqrt_C =
          B * D.cwiseInverse().asDiagonal() * B.transpose();

      if (sigma * D.maxCoeff() < 1e-13) break;
      if (D.maxCoeff() / D.minCoeff() > 1e7) break;

      int batch = static_cast<int>(std::min<long>(st.lambda, run_budget - run_evals));
      for (int k = 0; k < batch; ++k) {
        Eigen::VectorXd x(n);
        for (int attempt = 0; attempt < 10; ++attempt) {
          Eigen::VectorXd z(n);
          for (int i = 0; i < n; ++i) z(i) = rng.next_normal();
          x = mean + sigma * (B * (D.asDiagonal() * z));
          if ((x.array() >= 0.0).all() && (x.array() <= 1.0).all()) break;
        }
        x = x.cwiseMax(0.0).cwiseMin(1.0);
        xs[k] = x;
        fs[k] = f(x);
        ++run_evals;
        ++result.evaluations;
        if (fs[k] > result.best_f) {
          result.best_f = fs[k];
          result.best_x = x;
        }
      }
      if (batch < st.lambda) break;  // budget exhausted mid-generation

      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return fs[a] > fs[b]; });

      double gen_best = fs[order[0]];
      if (gen_best > run_best + 1e-15) {
        run_best = gen_best;
        stagnation = 0;
      } else if (++stagnation > stagnation_limit) {
        break;
      }

      // Recombination on the clamped candidates.
      Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < st.mu; ++i) new_mean += st.weights(i) * xs[order[i]];
      Eigen::VectorXd mean_shift = (new_mean - mean) / sigma;

      p_sigma = (1.0 - st.c_sigma) * p_sigma +
                std::sqrt(st.c_sigma * (2.0 - st.c_sigma) * st.mu_eff) *
                    (inv_sqrt_C * mean_shift);
      ++generation;
      double ps_norm = p_sigma.norm();
      double denom = std::sqrt(1.0 - std::pow(1.0 - st.c_sigma, 2.0 * generation));
      bool hsig = ps_norm / denom < (1.4 + 2.0 / (n + 1.0)) * st.chi_n;

      p_c = (1.0 - st.c_c) * p_c;
      if (hsig) {
        p_c += std::sqrt(st.c_c * (2.0 - st.c_c) * st.mu_eff) * mean_shift;
      }

      Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < st.mu; ++i) {
        Eigen::VectorXd y = (xs[order[i]] - mean) / sigma;
        rank_mu.noalias() += st.weights(i) * (y * y.transpose());
      }
      double c1a = st.c_1 * (1.0 - (hsig ? 0.0 : 1.0) * st.c_c * (2.0 - st.c_c));
      C = (1.0 - c1a - st.c_mu) * C + st.c_1 * (p_c * p_c.transpose()) + st.c_mu * rank_mu;
      C = 0.5 * (C + C.transpose());  // keep symmetric under roundoff

      mean = new_mean;
      sigma *= std::exp((st.c_sigma / st.d_sigma) * (ps_norm / st.chi_n - 1.0));
    }
  }
  return result;
}

}  // namespace boaug::cmaes

#endif  // BOAUG_CMAES_HPP_
