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

#include "club/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace club {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }

}  // namespace

NoiseModel NoiseModel::uniform() {
  NoiseModel m;
  m.kind_ = NoiseKind::kUniform;
  return m;
}

NoiseModel NoiseModel::truncated_gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("truncated gaussian sigma must be positive");
  }
  NoiseModel m;
  m.kind_ = NoiseKind::kTruncatedGaussian;
  m.sigma_ = sigma;
  m.cdf_low_ = std_normal_cdf(-1.0 / sigma);
  m.mass_ = std_normal_cdf(1.0 / sigma) - m.cdf_low_;
  return m;
}

NoiseModel NoiseModel::piecewise_linear_cdf(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw std::invalid_argument("piecewise cdf needs at least two knots");
  if (knots.front() != std::pair<double, double>{-1.0, 0.0} ||
      knots.back() != std::pair<double, double>{1.0, 1.0}) {
    throw std::invalid_argument("piecewise cdf must start at (-1,0) and end at (1,1)");
  }
  double mean = 0.0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const auto [x0, f0] = knots[k - 1];
    const auto [x1, f1] = knots[k];
    if (!(x1 > x0) || !(f1 > f0)) {
      throw std::invalid_argument("piecewise cdf knots must be strictly increasing");
    }
    mean += (f1 - f0) * 0.5 * (x0 + x1);
  }
  if (std::abs(mean) > 1e-9) throw std::invalid_argument("piecewise cdf must have mean zero");
  NoiseModel m;
  m.kind_ = NoiseKind::kPiecewiseLinearCdf;
  m.knots_ = std::move(knots);
  return m;
}

NoiseModel NoiseModel::parse(const std::string& spec) {
  if (spec == "uniform") return uniform();
  if (spec.rfind("truncgauss:", 0) == 0) {
    return truncated_gaussian(std::stod(spec.substr(11)));
  }
  if (spec.rfind("pwl:", 0) == 0) {
    std::vector<std::pair<double, double>> knots;
    std::stringstream ss(spec.substr(4));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto slash = item.find('/');
      if (slash == std::string::npos) throw std::invalid_argument("bad knot: " + item);
      knots.emplace_back(std::stod(item.substr(0, slash)), std::stod(item.substr(slash + 1)));
    }
    return piecewise_linear_cdf(std::move(knots));
  }
  throw std::invalid_argument("unknown noise model: " + spec);
}

double NoiseModel::gaussian_cdf_unnormalized(double x) const {
  return std_normal_cdf(x / sigma_) - cdf_low_;
}

double NoiseModel::cdf(double x) const {
  if (std::isnan(x)) return x;
  if (kind_ == NoiseKind::kPointMass) return x >= 0.0 ? 1.0 : 0.0;
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  switch (kind_) {
    case NoiseKind::kUniform:
      return 0.5 * (x + 1.0);
    case NoiseKind::kTruncatedGaussian:
      return std::clamp(gaussian_cdf_unnormalized(x) / mass_, 0.0, 1.0);
    case NoiseKind::kPiecewiseLinearCdf: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                 [](double v, const auto& k) { return v < k.first; });
      const auto& [x1, f1] = *it;
      const auto& [x0, f0] = *(it - 1);
      return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
    }
    case NoiseKind::kPointMass:
      break;
  }
  return 0.0;
}

double NoiseModel::pdf(double x) const {
  if (kind_ == NoiseKind::kPointMass) return 0.0;
  if (!(x > -1.0 && x < 1.0)) return 0.0;
  switch (kind_) {
    case NoiseKind::kUniform:
      return 0.5;
    case NoiseKind::kTruncatedGaussian: {
      const double t = x / sigma_;
      return kInvSqrt2Pi * std::exp(-0.5 * t * t) / (sigma_ * mass_);
    }
    case NoiseKind::kPiecewiseLinearCdf: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                 [](double v, const auto& k) { return v < k.first; });
      const auto& [x1, f1] = *it;
      const auto& [x0, f0] = *(it - 1);
      return (f1 - f0) / (x1 - x0);
    }
    case NoiseKind::kPointMass:
      break;
  }
  return 0.0;
}

double NoiseModel::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantile probability outside [0,1]");
  if (kind_ == NoiseKind::kPointMass) return 0.0;
  if (p == 0.0) return -1.0;
  if (p == 1.0) return 1.0;
  switch (kind_) {
    case NoiseKind::kUniform:
      return 2.0 * p - 1.0;
    case NoiseKind::kPiecewiseLinearCdf: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), p,
                                 [](double v, const auto& k) { return v < k.second; });
      if (it == knots_.end()) return 1.0;
      const auto& [x1, f1] = *it;
      const auto& [x0, f0] = *(it - 1);
      return x0 + (x1 - x0) * (p - f0) / (f1 - f0);
    }
    case NoiseKind::kTruncatedGaussian: {
      // Bracketed Newton: the bracket shrinks every step, Newton accelerates it.
      double lo = -1.0, hi = 1.0;
      double x = 0.0;
      for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double g = cdf(x) - p;
        if (g == 0.0) return x;
        if (g > 0.0) hi = x; else lo = x;
        const double d = pdf(x);
        double next = d > 0.0 ? x - g / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < 1e-15) return next;
        x = next;
      }
      return x;
    }
    case NoiseKind::kPointMass:
      break;
  }
  return 0.0;
}

double NoiseModel::density_lower() const {
  switch (kind_) {
    case NoiseKind::kUniform:
      return 0.5;
    case NoiseKind::kTruncatedGaussian:
      return pdf(std::nextafter(1.0, 0.0));
    case NoiseKind::kPiecewiseLinearCdf: {
      double lo = 1e300;
      for (std::size_t k = 1; k < knots_.size(); ++k) {
        lo = std::min(lo, (knots_[k].second - knots_[k - 1].second) /
                              (knots_[k].first - knots_[k - 1].first));
      }
      return lo;
    }
    case NoiseKind::kPointMass:
      break;
  }
  return 0.0;
}

double NoiseModel::density_upper() const {
  switch (kind_) {
    case NoiseKind::kUniform:
      return 0.5;
    case NoiseKind::kTruncatedGaussian:
      return pdf(0.0);
    case NoiseKind::kPiecewiseLinearCdf: {
      double hi = 0.0;
      for (std::size_t k = 1; k < knots_.size(); ++k) {
        hi = std::max(hi, (knots_[k].second - knots_[k - 1].second) /
                              (knots_[k].first - knots_[k - 1].first));
      }
      return hi;
    }
    case NoiseKind::kPointMass:
      break;
  }
  return 0.0;
}

std::vector<double> NoiseModel::breakpoints() const {
  if (kind_ == NoiseKind::kPointMass) return {0.0};
  if (kind_ == NoiseKind::kPiecewiseLinearCdf) {
    std::vector<double> xs;
    for (const auto& k : knots_) xs.push_back(k.first);
    return xs;
  }
  return {-1.0, 1.0};
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case NoiseKind::kUniform:
      return "uniform";
    case NoiseKind::kTruncatedGaussian:
      os.precision(17);
      os << "truncgauss:" << sigma_;
      return os.str();
    case NoiseKind::kPiecewiseLinearCdf:
      os.precision(17);
      os << "pwl:";
      for (std::size_t k = 0; k < knots_.size(); ++k) {
        if (k) os << ',';
        os << knots_[k].first << '/' << knots_[k].second;
      }
      return os.str();
    case NoiseKind::kPointMass:
      return "point_mass";
  }
  return "";
}

nlohmann::json NoiseModel::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case NoiseKind::kUniform:
      j["tag"] = "uniform";
      break;
    case NoiseKind::kTruncatedGaussian:
      j["tag"] = "truncated_gaussian";
      j["sigma"] = sigma_;
      break;
    case NoiseKind::kPiecewiseLinearCdf:
      j["tag"] = "piecewise_linear_cdf";
      j["knots"] = knots_;
      break;
    case NoiseKind::kPointMass:
      j["tag"] = "point_mass";
      break;
  }
  return j;
}

NoiseModel NoiseModel::from_json(const nlohmann::json& j) {
  const std::string tag = j.at("tag").get<std::string>();
  if (tag == "uniform") return uniform();
  if (tag == "truncated_gaussian") return truncated_gaussian(j.at("sigma").get<double>());
  if (tag == "piecewise_linear_cdf") {
    return piecewise_linear_cdf(j.at("knots").get<std::vector<std::pair<double, double>>>());
  }
  throw std::invalid_argument("noise tag not loadable: " + tag);
}

}  // namespace club
