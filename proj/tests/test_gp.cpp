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
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "boaug/gp.hpp"
#include "boaug/rng.hpp"
#include "support/oracles.hpp"

using namespace boaug;
using namespace boaug::gp;
using boaug::testsupport::DenseGpOracle;

namespace {

Eigen::MatrixXd random_inputs(Eigen::Index n, Eigen::Index d, RngStream& rng) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.next_double();
  }
  return X;
}

KernelHyperparams random_hp(Eigen::Index d, RngStream& rng) {
  KernelHyperparams hp;
  hp.lengthscales.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) hp.lengthscales(j) = 0.05 + rng.next_double() * 2.0;
  hp.signal_variance = 0.1 + rng.next_double() * 3.0;
  hp.noise_variance = rng.next_double() * 0.1;
  return hp;
}

}  // namespace

TEST_CASE("matern52 closed-form values", "[gp]") {
  auto hp = KernelHyperparams::isotropic(3, 1.0, 1.0, 0.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(3);
  CHECK(matern52(a, a, hp) == Catch::Approx(1.0));

  Eigen::VectorXd b = a;
  b(0) = 1.0;
  // (1 + sqrt5 + 5/3) exp(-sqrt5) at unit distance, unit lengthscale.
  CHECK(matern52(a, b, hp) == Catch::Approx(0.52399410883182).epsilon(1e-10));

  b(0) = 200.0;
  CHECK(matern52(a, b, hp) < 1e-100);

  hp.signal_variance = 2.5;
  CHECK(matern52(a, a, hp) == Catch::Approx(2.5));
}

TEST_CASE("kernel matrices are positive semi-definite", "[gp]") {
  RngStream rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_below(19));
    Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.next_below(15));
    auto X = random_inputs(n, d, rng);
    auto hp = random_hp(d, rng);
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        K(i, j) = matern52(X.row(i).transpose(), X.row(j).transpose(), hp);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    double min_eig = eig.eigenvalues().minCoeff();
    CHECK(min_eig >= -1e-8 * K.trace() / static_cast<double>(n));
  }
}

TEST_CASE("fit reconstructs the kernel matrix through its factor", "[gp]") {
  RngStream rng(102);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Index n = 5;
    auto X = random_inputs(n, 4, rng);
    auto hp = random_hp(4, rng);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = rng.next_double();
    GpModel model = GpModel::fit(X, y, hp);

    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        K(i, j) = matern52(X.row(i).transpose(), X.row(j).transpose(), hp);
      }
      K(i, i) += model.noise_plus_jitter();
    }
    Eigen::MatrixXd recon = model.factor() * model.factor().transpose();
    CHECK((recon - K).norm() / K.norm() < 1e-8);
  }
}

TEST_CASE("posterior matches the dense-solve oracle", "[gp]") {
  RngStream rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_below(10));
    Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.next_below(15));
    auto X = random_inputs(n, d, rng);
    auto hp = random_hp(d, rng);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = rng.next_double() * 4.0 - 2.0;

    GpModel model = GpModel::fit(X, y, hp);
    DenseGpOracle oracle(X, y, hp, model.jitter());
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd x(d);
      for (Eigen::Index j = 0; j < d; ++j) x(j) = rng.next_double();
      auto [mean, var] = model.posterior(x);
      auto [omean, ovar] = oracle.posterior(x);
      CHECK(mean == Catch::Approx(omean).margin(1e-8));
      CHECK(var == Catch::Approx(ovar).margin(1e-8));
    }
  }
}

TEST_CASE("noiseless fit interpolates the training data", "[gp]") {
  RngStream rng(104);
  Eigen::Index n = 6, d = 3;
  auto X = random_inputs(n, d, rng);
  auto hp = KernelHyperparams::isotropic(d, 0.5, 1.3, 0.0);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = std::sin(3.0 * X(i, 0)) + X(i, 1);

  GpModel model = GpModel::fit(X, y, hp);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [mean, var] = model.posterior(X.row(i).transpose());
    CHECK(mean == Catch::Approx(y(i)).margin(1e-6));
    auto [mean_s, var_s] = model.posterior_standardized(X.row(i).transpose());
    CHECK(var_s <= 1e-8 * hp.signal_variance);
    (void)mean_s;
    (void)var;
  }
}

TEST_CASE("single observation predicts its own value everywhere near zero variance at itself",
          "[gp]") {
  Eigen::MatrixXd X(1, 2);
  X << 0.3, 0.7;
  Eigen::VectorXd y(1);
  y << 0.42;
  auto hp = KernelHyperparams::isotropic(2, 0.4, 1.0, 0.0);
  GpModel model = GpModel::fit(X, y, hp);
  auto [mean_at, var_at] = model.posterior(X.row(0).transpose());
  CHECK(mean_at == Catch::Approx(0.42).margin(1e-10));
  CHECK(var_at <= 1e-8);
  Eigen::VectorXd far(2);
  far << 100.0, -50.0;
  auto [mean_far, var_far] = model.posterior(far);
  CHECK(mean_far == Catch::Approx(0.42).margin(1e-10));  // reverts to the target mean
  (void)var_far;
}

TEST_CASE("posterior reverts to prior far from the data", "[gp]") {
  RngStream rng(105);
  Eigen::Index n = 3, d = 2;
  auto X = random_inputs(n, d, rng);
  auto hp = KernelHyperparams::isotropic(d, 0.3, 1.7, 1e-4);
  // Targets with unit population std so original-scale variance comparisons
  // read directly in signal-variance units.
  Eigen::VectorXd y(n);
  double a = std::sqrt(1.5);
  y << -a, 0.0, a;
  GpModel model = GpModel::fit(X, y, hp);

  Eigen::VectorXd far = Eigen::VectorXd::Constant(d, 500.0);
  auto [mean, var] = model.posterior(far);
  CHECK(mean == Catch::Approx(y.mean()).margin(1e-9));
  CHECK(var == Catch::Approx(hp.signal_variance).margin(1e-9));

  auto [mean_s, var_s] = model.posterior_standardized(far);
  CHECK(mean_s == Catch::Approx(0.0).margin(1e-9));
  CHECK(var_s == Catch::Approx(hp.signal_variance).margin(1e-9));
}

TEST_CASE("duplicated rows with zero noise succeed via jitter escalation", "[gp]") {
  Eigen::MatrixXd X(4, 2);
  X << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.9;
  Eigen::VectorXd y(4);
  y << 1.0, 1.0, 1.0, 2.0;
  auto hp = KernelHyperparams::isotropic(2, 0.3, 1.0, 0.0);
  GpModel model = GpModel::fit(X, y, hp);
  CHECK(model.jitter() > 0.0);
  auto [mean, var] = model.posterior(X.row(0).transpose());
  CHECK(mean == Catch::Approx(1.0).margin(1e-3));
  (void)var;
}

TEST_CASE("log marginal likelihood closed forms", "[gp]") {
  // n=1, y=[0]: standardization leaves 0; LML = -log(K)/2 - log(2pi)/2.
  Eigen::MatrixXd X(1, 1);
  X << 0.5;
  Eigen::VectorXd y(1);
  y << 0.0;
  auto hp = KernelHyperparams::isotropic(1, 0.3, 2.0, 0.5);
  double lml = log_marginal_likelihood(X, y, hp);
  double k = 2.0 + 0.5 + 1e-10 * 2.0;  // signal + noise + jitter
  CHECK(lml == Catch::Approx(-0.5 * std::log(k) - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-9));

  // n=2: check against a direct 2x2 determinant/inverse computation.
  Eigen::MatrixXd X2(2, 1);
  X2 << 0.2, 0.8;
  Eigen::VectorXd y2(2);
  y2 << 1.0, 3.0;
  auto hp2 = KernelHyperparams::isotropic(1, 0.4, 1.5, 0.1);
  GpModel model = GpModel::fit(X2, y2, hp2);
  DenseGpOracle oracle(X2, y2, hp2, model.jitter());
  CHECK(log_marginal_likelihood(X2, y2, hp2) ==
        Catch::Approx(oracle.log_marginal_likelihood()).margin(1e-10));
}

TEST_CASE("LML approaches the pure-noise value as noise dominates", "[gp]") {
  RngStream rng(106);
  Eigen::MatrixXd X = random_inputs(5, 2, rng);
  Eigen::VectorXd y(5);
  for (Eigen::Index i = 0; i < 5; ++i) y(i) = rng.next_double();
  auto hp = KernelHyperparams::isotropic(2, 0.3, 1.0, 0.0);

  double prev = 1e100;
  for (double noise : {1e2, 1e4, 1e6}) {
    hp.noise_variance = noise;
    double lml = log_marginal_likelihood(X, y, hp);
    // Pure-noise model of standardized targets: K ~= noise * I.
    double pure = -0.5 * (5.0 / noise) - 0.5 * 5.0 * std::log(noise) -
                  0.5 * 5.0 * std::log(2.0 * M_PI);
    if (noise >= 1e4) CHECK(lml == Catch::Approx(pure).epsilon(1e-3));
    CHECK(lml < prev);  // grows ever more negative
    prev = lml;
  }
}

TEST_CASE("internal standardization makes the hyperparameter posterior affine invariant",
          "[gp]") {
  RngStream rng(107);
  Eigen::MatrixXd X = random_inputs(8, 3, rng);
  Eigen::VectorXd y(8);
  for (Eigen::Index i = 0; i < 8; ++i) y(i) = rng.next_double() * 2.0;
  Eigen::VectorXd y_affine = 5.0 * y.array() + 3.0;

  auto hp = KernelHyperparams::isotropic(3, 0.3, 1.0, 1e-3);
  CHECK(log_marginal_likelihood(X, y, hp) ==
        Catch::Approx(log_marginal_likelihood(X, y_affine, hp)).margin(1e-12));

  // The hyperparameter posterior argmax over a fixed candidate set is
  // identical for y and 5y+3.
  HyperPrior prior;
  auto log_posterior = [&](const Eigen::VectorXd& targets, const KernelHyperparams& h) {
    double lp = log_marginal_likelihood(X, targets, h);
    for (Eigen::Index j = 0; j < 3; ++j) {
      lp += prior.lengthscale.logpdf_log(std::log(h.lengthscales(j)));
    }
    lp += prior.signal_variance.logpdf_log(std::log(h.signal_variance));
    lp += prior.noise_variance.logpdf_log(std::log(h.noise_variance));
    return lp;
  };
  RngStream grid(501);
  int argmax_plain = -1, argmax_affine = -1;
  double best_plain = -1e300, best_affine = -1e300;
  for (int i = 0; i < 200; ++i) {
    KernelHyperparams h;
    h.lengthscales.resize(3);
    for (int j = 0; j < 3; ++j) h.lengthscales(j) = std::exp((grid.next_double() - 0.5) * 4.0);
    h.signal_variance = std::exp((grid.next_double() - 0.5) * 4.0);
    h.noise_variance = std::exp(grid.next_double() * 8.0 - 9.0);
    double lp_plain = log_posterior(y, h);
    double lp_affine = log_posterior(y_affine, h);
    if (lp_plain > best_plain) {
      best_plain = lp_plain;
      argmax_plain = i;
    }
    if (lp_affine > best_affine) {
      best_affine = lp_affine;
      argmax_affine = i;
    }
  }
  CHECK(argmax_plain == argmax_affine);
}

TEST_CASE("slice sampler degenerate configuration returns the initial point", "[gp]") {
  RngStream rng(108);
  Eigen::MatrixXd X = random_inputs(4, 2, rng);
  Eigen::VectorXd y(4);
  for (Eigen::Index i = 0; i < 4; ++i) y(i) = rng.next_double();

  SliceConfig cfg;
  cfg.burn_in = 0;
  cfg.thinning = 1;
  cfg.width = 0.0;  // zero-step: every update keeps the current point
  RngStream mcmc(7);
  auto samples = sample_hyperparams(X, y, HyperPrior::flat_prior(), 1, mcmc, cfg);
  REQUIRE(samples.size() == 1);
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(samples[0].lengthscales(j) == Catch::Approx(0.3));  // prior median start
  }
  CHECK(samples[0].signal_variance == Catch::Approx(1.0));
  CHECK(samples[0].noise_variance == Catch::Approx(1e-3));
}

TEST_CASE("slice samples always satisfy positivity invariants", "[gp]") {
  RngStream rng(109);
  Eigen::MatrixXd X = random_inputs(10, 3, rng);
  Eigen::VectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) y(i) = rng.next_double();
  RngStream mcmc(11);
  SliceConfig cfg;
  cfg.burn_in = 5;
  cfg.thinning = 1;
  auto samples = sample_hyperparams(X, y, HyperPrior{}, 20, mcmc, cfg);
  REQUIRE(samples.size() == 20);
  for (const auto& s : samples) {
    CHECK((s.lengthscales.array() > 0.0).all());
    CHECK(s.signal_variance > 0.0);
    CHECK(s.noise_variance >= 0.0);
  }
}

TEST_CASE("slice sampling recovers a known lengthscale's order of magnitude", "[gp]") {
  // Generate from a 1-d GP with lengthscale 0.2 and look at the posterior
  // median over 50 retained samples.
  const Eigen::Index n = 40;
  RngStream rng(110);
  Eigen::MatrixXd X = random_inputs(n, 1, rng);
  auto hp_true = KernelHyperparams::isotropic(1, 0.2, 1.0, 1e-6);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K(i, j) = matern52(X.row(i).transpose(), X.row(j).transpose(), hp_true);
    }
    K(i, i) += 1e-8;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_normal();
  Eigen::VectorXd y = Eigen::MatrixXd(llt.matrixL()) * z;

  RngStream mcmc(12);
  SliceConfig cfg;
  cfg.burn_in = 30;
  cfg.thinning = 2;
  auto samples = sample_hyperparams(X, y, HyperPrior{}, 50, mcmc, cfg);
  std::vector<double> ls;
  ls.reserve(samples.size());
  for (const auto& s : samples) ls.push_back(s.lengthscales(0));
  std::sort(ls.begin(), ls.end());
  double median = ls[ls.size() / 2];
  CHECK(median >= 0.05);
  CHECK(median <= 0.8);
}

TEST_CASE("sampling is deterministic per seed", "[gp]") {
  RngStream rng(111);
  Eigen::MatrixXd X = random_inputs(6, 2, rng);
  Eigen::VectorXd y(6);
  for (Eigen::Index i = 0; i < 6; ++i) y(i) = rng.next_double();
  SliceConfig cfg;
  cfg.burn_in = 8;
  cfg.thinning = 3;
  RngStream a(99), b(99);
  auto s1 = sample_hyperparams(X, y, HyperPrior{}, 4, a, cfg);
  auto s2 = sample_hyperparams(X, y, HyperPrior{}, 4, b, cfg);
  for (size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].lengthscales == s2[i].lengthscales);
    CHECK(s1[i].signal_variance == s2[i].signal_variance);
    CHECK(s1[i].noise_variance == s2[i].noise_variance);
  }
}

TEST_CASE("fit input validation", "[gp]") {
  Eigen::MatrixXd X(2, 2);
  X << 0, 0, 1, 1;
  Eigen::VectorXd y(2);
  y << 0, 1;
  CHECK_THROWS_AS(GpModel::fit(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                               KernelHyperparams::isotropic(2, 0.3)),
                  DomainError);
  CHECK_THROWS_AS(GpModel::fit(X, y, KernelHyperparams::isotropic(3, 0.3)), DomainError);
  Eigen::VectorXd y3(3);
  y3 << 0, 1, 2;
  CHECK_THROWS_AS(GpModel::fit(X, y3, KernelHyperparams::isotropic(2, 0.3)), DomainError);
}
