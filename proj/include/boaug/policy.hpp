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
#ifndef BOAUG_POLICY_HPP_
#define BOAUG_POLICY_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "boaug/errors.hpp"

namespace boaug::policy {

/// The 14 image transformations, in the canonical encoding order.
/// decode_opers below maps a scalar in [0,196] onto an ordered pair of these.
enum class OperationKind : int {
  kShearX = 0,
  kShearY = 1,
  kTranslateX = 2,
  kTranslateY = 3,
  kRotate = 4,
  kSolarize = 5,
  kPosterize = 6,
  kContrast = 7,
  kColor = 8,
  kBrightness = 9,
  kSharpness = 10,
  kAutoContrast = 11,
  kInvert = 12,
  kEqualize = 13,
};

inline constexpr int kOperationCount = 14;

/// Operations that take no magnitude parameter.
inline constexpr bool is_magnitude_free(OperationKind op) {
  return op == OperationKind::kAutoContrast || op == OperationKind::kInvert ||
         op == OperationKind::kEqualize;
}

inline constexpr std::array<std::string_view, kOperationCount> kOperationNames = {
    "ShearX",     "ShearY",   "TranslateX", "TranslateY", "Rotate",
    "Solarize",   "Posterize", "Contrast",  "Color",      "Brightness",
    "Sharpness",  "AutoContrast", "Invert", "Equalize",
};

inline std::string_view operation_name(OperationKind op) {
  return kOperationNames[static_cast<int>(op)];
}

inline OperationKind operation_from_name(std::string_view name) {
  for (int i = 0; i < kOperationCount; ++i) {
    if (kOperationNames[i] == name) return static_cast<OperationKind>(i);
  }
  throw DomainError("unknown operation name: " + std::string(name));
}

/// Actual-unit range an operation's normalized magnitude maps onto.
struct MagnitudeRange {
  double lo = 0.0;
  double hi = 0.0;
  bool integer_valued = false;
};

/// Per-operation magnitude ranges. Magnitude-free operations have no entry.
class MagnitudeTable {
 public:
  /// The stock ranges: shear rate +-0.3, translate +-150 px, rotate +-30 deg,
  /// solarize threshold [0,256], posterize [4,8] bits (integer), and the four
  /// blend factors [0.1,1.9].
  static MagnitudeTable stock() {
    MagnitudeTable t;
    t.set(OperationKind::kShearX, {-0.3, 0.3, false});
    t.set(OperationKind::kShearY, {-0.3, 0.3, false});
    t.set(OperationKind::kTranslateX, {-150.0, 150.0, false});
    t.set(OperationKind::kTranslateY, {-150.0, 150.0, false});
    t.set(OperationKind::kRotate, {-30.0, 30.0, false});
    t.set(OperationKind::kSolarize, {0.0, 256.0, false});
    t.set(OperationKind::kPosterize, {4.0, 8.0, true});
    t.set(OperationKind::kContrast, {0.1, 1.9, false});
    t.set(OperationKind::kColor, {0.1, 1.9, false});
    t.set(OperationKind::kBrightness, {0.1, 1.9, false});
    t.set(OperationKind::kSharpness, {0.1, 1.9, false});
    return t;
  }

  /// The stock table with translation capped for small rasters (a +-150 px shift on a
  /// 32 px image would blank it). Default cap +-10 px suits CIFAR/SVHN sizes.
  static MagnitudeTable small32(double max_translate = 10.0) {
    MagnitudeTable t = stock();
    t.set(OperationKind::kTranslateX, {-max_translate, max_translate, false});
    t.set(OperationKind::kTranslateY, {-max_translate, max_translate, false});
    return t;
  }

  static MagnitudeTable by_name(const std::string& name) {
    if (name == "stock") return stock();
    if (name == "small32") return small32();
    throw ConfigError("unknown magnitude table: " + name);
  }

  void set(OperationKind op, MagnitudeRange range) {
    if (is_magnitude_free(op)) {
      throw DomainError(std::string("operation ") + std::string(operation_name(op)) +
                        " takes no magnitude");
    }
    if (!(range.lo < range.hi)) {
      throw DomainError(std::string("magnitude range for ") +
                        std::string(operation_name(op)) + " must satisfy lo < hi");
    }
    ranges_[static_cast<size_t>(op)] = range;
  }

  bool has(OperationKind op) const {
    return ranges_[static_cast<size_t>(op)].has_value();
  }

  const MagnitudeRange& at(OperationKind op) const {
    const auto& r = ranges_[static_cast<size_t>(op)];
    if (!r) {
      throw DomainError(std::string("operation ") + std::string(operation_name(op)) +
                        " has no magnitude range");
    }
    return *r;
  }

 private:
  std::array<std::optional<MagnitudeRange>, kOperationCount> ranges_;
};

/// Number of search dimensions per sub-policy: [opers, pro1, m1, pro2, m2].
inline constexpr int kSubPolicyDims = 5;
inline constexpr int kDefaultSubPolicies = 3;
inline constexpr int kDefaultPolicyDims = kSubPolicyDims * kDefaultSubPolicies;

inline constexpr double kOpersMax = 196.0;
inline constexpr double kMagnitudeMax = 9.0;

/// Raw search point: consecutive 5-real blocks, one per sub-policy.
using PolicyVector = std::vector<double>;

/// Per-dimension upper bound of the search box (lower bounds are all 0).
inline double dimension_width(int dim_in_block) {
  switch (dim_in_block) {
    case 0: return kOpersMax;
    case 1: return 1.0;
    case 2: return kMagnitudeMax;
    case 3: return 1.0;
    case 4: return kMagnitudeMax;
    default: throw DomainError("dimension index out of block range");
  }
}

/// Clamp a raw vector onto the search box, dimension by dimension.
/// Non-finite coordinates collapse to the lower bound so the result is total.
inline PolicyVector clamp_to_box(PolicyVector v) {
  for (size_t i = 0; i < v.size(); ++i) {
    double hi = dimension_width(static_cast<int>(i % kSubPolicyDims));
    double x = v[i];
    if (std::isnan(x)) x = 0.0;
    v[i] = std::min(std::max(x, 0.0), hi);
  }
  return v;
}

/// Map a raw policy vector onto [0,1]^d (the scale the optimizer works on).
inline std::vector<double> normalize_to_unit(const PolicyVector& v) {
  std::vector<double> u(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    u[i] = v[i] / dimension_width(static_cast<int>(i % kSubPolicyDims));
  }
  return u;
}

/// Inverse of normalize_to_unit.
inline PolicyVector denormalize_from_unit(const std::vector<double>& u) {
  PolicyVector v(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    v[i] = u[i] * dimension_width(static_cast<int>(i % kSubPolicyDims));
  }
  return v;
}

/// Map the first block dimension onto an ordered operation pair:
/// k = floor(opers) clamped to [0,195], pair = (k div 14, k mod 14).
inline std::pair<OperationKind, OperationKind> decode_opers(double opers) {
  if (!(opers >= 0.0 && opers <= kOpersMax)) {
    throw DomainError("opers dimension out of [0,196]: " + std::to_string(opers));
  }
  int k = static_cast<int>(std::floor(opers));
  k = std::min(std::max(k, 0), kOperationCount * kOperationCount - 1);
  return {static_cast<OperationKind>(k / kOperationCount),
          static_cast<OperationKind>(k % kOperationCount)};
}

/// Map a normalized magnitude in [0,9] onto the operation's actual units.
/// Integer-valued ranges round half away from zero.
inline double denormalize_magnitude(OperationKind op, double m,
                                    const MagnitudeTable& ranges) {
  if (is_magnitude_free(op)) {
    throw DomainError(std::string("operation ") + std::string(operation_name(op)) +
                      " takes no magnitude");
  }
  if (!(m >= 0.0 && m <= kMagnitudeMax)) {
    throw DomainError("magnitude out of [0,9]: " + std::to_string(m));
  }
  const MagnitudeRange& r = ranges.at(op);
  double value = r.lo + (m / kMagnitudeMax) * (r.hi - r.lo);
  if (r.integer_valued) value = std::round(value);
  return value;
}

/// One decoded augmentation step: two operations with application
/// probabilities and actual-unit magnitudes (absent for magnitude-free ops).
struct DecodedSubPolicy {
  OperationKind op1;
  double prob1;
  std::optional<double> mag1;
  OperationKind op2;
  double prob2;
  std::optional<double> mag2;
};

/// Three sub-policies decoded from one search point.
using DecodedPolicy = std::vector<DecodedSubPolicy>;

/// Pooled output of several independent searches.
using PolicySet = std::vector<DecodedPolicy>;

/// Decode a raw search point. The vector is clamped onto the box first, so
/// the call is total on arbitrary real input.
inline DecodedPolicy decode_policy(const PolicyVector& v, const MagnitudeTable& ranges) {
  if (v.size() % kSubPolicyDims != 0 || v.empty()) {
    throw DomainError("policy vector length must be a positive multiple of 5, got " +
                      std::to_string(v.size()));
  }
  PolicyVector c = clamp_to_box(v);
  DecodedPolicy out;
  out.reserve(c.size() / kSubPolicyDims);
  for (size_t b = 0; b < c.size(); b += kSubPolicyDims) {
    auto [op1, op2] = decode_opers(c[b]);
    DecodedSubPolicy sp;
    sp.op1 = op1;
    sp.prob1 = c[b + 1];
    sp.mag1 = is_magnitude_free(op1)
                  ? std::nullopt
                  : std::optional<double>(denormalize_magnitude(op1, c[b + 2], ranges));
    sp.op2 = op2;
    sp.prob2 = c[b + 3];
    sp.mag2 = is_magnitude_free(op2)
                  ? std::nullopt
                  : std::optional<double>(denormalize_magnitude(op2, c[b + 4], ranges));
    out.push_back(sp);
  }
  return out;
}

/// Flatten a policy set into its pool of sub-policies, in order.
inline std::vector<DecodedSubPolicy> sub_policy_pool(const PolicySet& set) {
  std::vector<DecodedSubPolicy> pool;
  for (const auto& p : set) pool.insert(pool.end(), p.begin(), p.end());
  return pool;
}

// --- Policy JSON schema ---
//
// { "policies": [ { "sub_policies": [ { "op1": "...", "p1": r, "m1": r|null,
//   "op2": "...", "p2": r, "m2": r|null } x3 ] } ... ] }
// Magnitudes are in actual units; null for magnitude-free operations.

inline nlohmann::json sub_policy_to_json(const DecodedSubPolicy& sp) {
  nlohmann::json j;
  j["op1"] = std::string(operation_name(sp.op1));
  j["p1"] = sp.prob1;
  j["m1"] = sp.mag1 ? nlohmann::json(*sp.mag1) : nlohmann::json(nullptr);
  j["op2"] = std::string(operation_name(sp.op2));
  j["p2"] = sp.prob2;
  j["m2"] = sp.mag2 ? nlohmann::json(*sp.mag2) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json policy_to_json(const DecodedPolicy& p) {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& sp : p) subs.push_back(sub_policy_to_json(sp));
  return nlohmann::json{{"sub_policies", std::move(subs)}};
}

inline nlohmann::json policy_set_to_json(const PolicySet& set) {
  nlohmann::json policies = nlohmann::json::array();
  for (const auto& p : set) policies.push_back(policy_to_json(p));
  return nlohmann::json{{"policies", std::move(policies)}};
}

inline DecodedSubPolicy sub_policy_from_json(const nlohmann::json& j) {
  DecodedSubPolicy sp;
  try {
    sp.op1 = operation_from_name(j.at("op1").get<std::string>());
    sp.prob1 = j.at("p1").get<double>();
    sp.mag1 = j.at("m1").is_null() ? std::nullopt
                                   : std::optional<double>(j.at("m1").get<double>());
    sp.op2 = operation_from_name(j.at("op2").get<std::string>());
    sp.prob2 = j.at("p2").get<double>();
    sp.mag2 = j.at("m2").is_null() ? std::nullopt
                                   : std::optional<double>(j.at("m2").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad sub-policy document: ") + e.what());
  }
  if (is_magnitude_free(sp.op1) != !sp.mag1 || is_magnitude_free(sp.op2) != !sp.mag2) {
    throw FormatError("sub-policy magnitude arity does not match its operations");
  }
  return sp;
}

inline PolicySet policy_set_from_json(const nlohmann::json& j) {
  PolicySet set;
  try {
    for (const auto& p : j.at("policies")) {
      DecodedPolicy dp;
      for (const auto& sp : p.at("sub_policies")) dp.push_back(sub_policy_from_json(sp));
      set.push_back(std::move(dp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad policy document: ") + e.what());
  }
  return set;
}

}  // namespace boaug::policy

#endif  // BOAUG_POLICY_HPP_
