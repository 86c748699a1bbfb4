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
#ifndef BOAUG_ACQUISITION_HPP_
#define BOAUG_ACQUISITION_HPP_

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "boaug/errors.hpp"
#include "boaug/gp.hpp"

namespace boaug::acq {

inline double normal_pdf(double z) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Expected improvement for minimization: with z = (v_star - mean) / std,
/// EI = (v_star - mean) Phi(z) + std phi(z); exactly 0 when std is 0.
inline double expected_improvement(double mean, double std_dev, double v_star) {
  if (std_dev < 0.0) throw DomainError("expected_improvement: negative std");
  if (std_dev == 0.0) return 0.0;
  double z = (v_star - mean) / std_dev;
  double ei = (v_star - mean) * normal_cdf(z) + std_dev * normal_pdf(z);
  return ei > 0.0 ? ei : 0.0;
}

/// MCMC-integrated acquisition: the arithmetic mean of EI under each
/// hyperparameter sample's posterior. `v_star` is on the models' shared
/// standardized target scale.
inline double integrated_ei(const std::vector<gp::GpModel>& models,
                            const Eigen::VectorXd& x, double v_star) {
  if (models.empty()) throw DomainError("integrated_ei: no models");
  double total = 0.0;
  for (const auto& m : models) {
    auto [mean, var] = m.posterior_standardized(x);
    total += expected_improvement(mean, std::sqrt(var), v_star);
  }
  return total / static_cast<double>(models.size());
}

}  // namespace boaug::acq

#endif  // BOAUG_ACQUISITION_HPP_
