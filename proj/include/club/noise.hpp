// Copyright 2026 The CLUB Auction Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "club/rng.hpp"

namespace club {

namespace testing {
struct NoiseAccess;
}

enum class NoiseKind { kUniform, kTruncatedGaussian, kPiecewiseLinearCdf, kPointMass };

// Market noise distribution F on [-1, 1] with mean zero.
//
// Shipped families satisfy the regularity the pricing theory needs: a density
// bounded away from zero and infinity on the support, and log-concave F and
// 1 - F. Outside [-1, 1] the cdf clamps to 0 / 1 and the pdf is 0.
class NoiseModel {
 public:
  static NoiseModel uniform();
  // Centered Gaussian with standard deviation `sigma`, truncated to [-1, 1] and
  // renormalized. Symmetric, so the truncated mean is exactly zero.
  static NoiseModel truncated_gaussian(double sigma);
  // Continuous cdf through the given (x, F(x)) knots; the first knot must be
  // (-1, 0), the last (1, 1), x and F strictly increasing, and the implied mean
  // zero within 1e-9.
  static NoiseModel piecewise_linear_cdf(std::vector<std::pair<double, double>> knots);
  // Parses "uniform", "truncgauss:<sigma>" or "pwl:x0/F0,x1/F1,...".
  static NoiseModel parse(const std::string& spec);

  NoiseKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  double cdf(double x) const;
  double pdf(double x) const;
  // Generalized inverse of the cdf; throws std::domain_error for p outside [0, 1].
  double quantile(double p) const;
  double sample(Rng& rng) const { return quantile(rng.uniform()); }

  // Bounds c1 <= f <= C1 on (-1, 1).
  double density_lower() const;
  double density_upper() const;

  // Points where the density is not smooth (support ends and interior knots).
  std::vector<double> breakpoints() const;

  std::string describe() const;
  nlohmann::json to_json() const;
  static NoiseModel from_json(const nlohmann::json& j);

  bool operator==(const NoiseModel& other) const = default;

 private:
  friend struct testing::NoiseAccess;
  NoiseModel() = default;

  double gaussian_cdf_unnormalized(double x) const;

  NoiseKind kind_ = NoiseKind::kUniform;
  double sigma_ = 0.0;
  double mass_ = 1.0;      // Phi(1/sigma) - Phi(-1/sigma)
  double cdf_low_ = 0.0;   // Phi(-1/sigma)
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace club
