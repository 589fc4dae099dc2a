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

#include "club/auction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "club/kernels.hpp"

namespace club {
namespace {

// 10-point Gauss-Legendre nodes / weights on [-1, 1].
constexpr std::array<double, 10> kGlNodes = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
    -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
    0.8650633666889845,  0.9739065285171717};
constexpr std::array<double, 10> kGlWeights = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
    0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

constexpr double kMaxPanel = 0.05;

}  // namespace

AuctionOutcome run_round(std::span<const double> bids, std::span<const double> reserves) {
  const std::size_t n = bids.size();
  if (n == 0 || reserves.size() != n) throw std::invalid_argument("bids/reserves size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bids[i] >= 0.0) || !(reserves[i] >= 0.0)) {
      throw std::invalid_argument("bids and reserves must be nonnegative");
    }
  }
  AuctionOutcome out;
  out.m.assign(n, 0.0);
  out.q.assign(n, 0);

  std::size_t top = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (bids[i] > bids[top]) top = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double other = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) other = std::max(other, bids[j]);
    }
    out.m[i] = std::max(reserves[i], other);
  }
  if (reserves[top] < kNoReserve && bids[top] >= reserves[top]) {
    out.winner = static_cast<int>(top);
    out.q[top] = 1;
    out.revenue = out.m[top];
  }
  return out;
}

double virtual_value(const NoiseModel& noise, double x) {
  if (!(x > -1.0 && x < 1.0)) throw std::domain_error("virtual value defined on (-1,1)");
  const double f = noise.pdf(x);
  if (!(f > 0.0)) throw std::domain_error("virtual value needs a positive density");
  return x - (1.0 - noise.cdf(x)) / f;
}

double inverse_virtual_value(const NoiseModel& noise, double target) {
  // Nondecreasing under log-concavity of 1 - F, so bisection is valid.
  double lo = -1.0, hi = 1.0;
  const double eps = 1e-12;
  if (virtual_value(noise, lo + eps) >= target) return lo;
  if (virtual_value(noise, hi - eps) <= target) return hi;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (virtual_value(noise, mid) < target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double optimal_reserve_exact(const NoiseModel& noise, double mu) {
  const double alpha = 1.0 + mu + inverse_virtual_value(noise, -1.0 - mu);
  return std::clamp(alpha, 0.0, kMaxValuation);
}

double optimal_reserve_grid(const std::function<double(double)>& cdf, double mu, double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be positive");
  const auto points = static_cast<long>(std::floor(kMaxValuation / grid_step + 1e-9));
  double best_y = 0.0;
  double best = 0.0;  // objective at y = 0
  for (long k = 1; k <= points; ++k) {
    const double y = static_cast<double>(k) * grid_step;
    const double value = y * (1.0 - cdf(y - 1.0 - mu));
    if (value > best) {
      best = value;
      best_y = y;
    }
  }
  return best_y;
}

RevenueEstimate expected_revenue_mc(std::span<const double> mu, std::span<const double> reserves,
                                    const NoiseModel& noise, int samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const std::size_t n_bidders = mu.size();
  if (reserves.size() != n_bidders || n_bidders == 0) throw std::invalid_argument("size mismatch");
  const auto n = static_cast<std::size_t>(samples);
  std::vector<double> bids(n_bidders * n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < n_bidders; ++i) {
      bids[i * n + s] = std::max(0.0, 1.0 + mu[i] + noise.sample(rng));
    }
  }
  const auto sums = kernels::kernels().second_price_revenue(bids.data(), n_bidders, n, reserves.data());
  RevenueEstimate est;
  est.mean = sums.sum / static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (sums.sum_sq - static_cast<double>(n) * est.mean * est.mean) /
                                         static_cast<double>(n - 1));
    est.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return est;
}

double expected_revenue_quadrature(std::span<const double> mu, std::span<const double> reserves,
                                   const NoiseModel& noise, std::span<const double> shifts) {
  const std::size_t n = mu.size();
  if (reserves.size() != n || n == 0) throw std::invalid_argument("size mismatch");
  if (!shifts.empty() && shifts.size() != n) throw std::invalid_argument("shift size mismatch");
  if (noise.kind() == NoiseKind::kPointMass) {
    throw std::invalid_argument("quadrature needs a continuous noise model");
  }
  // Bid b_i = max(0, c_i + z) with c_i = 1 + mu_i + shift_i.
  std::vector<double> centre(n);
  for (std::size_t i = 0; i < n; ++i) centre[i] = 1.0 + mu[i] + (shifts.empty() ? 0.0 : shifts[i]);
  auto G = [&](std::size_t i, double t) { return t < 0.0 ? 0.0 : noise.cdf(t - centre[i]); };
  auto g = [&](std::size_t i, double t) { return t <= 0.0 ? 0.0 : noise.pdf(t - centre[i]); };

  double top = 0.0;
  std::vector<double> cuts;
  for (std::size_t i = 0; i < n; ++i) {
    for (double b : noise.breakpoints()) {
      if (centre[i] + b > 0.0) cuts.push_back(centre[i] + b);
    }
    top = std::max(top, centre[i] + 1.0);
  }
  for (double r : reserves) {
    if (r > 0.0 && r < top) cuts.push_back(r);
  }
  cuts.push_back(0.0);
  cuts.push_back(top);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = reserves[i];
    if (rho >= top || rho >= kNoReserve) continue;
    auto others_cdf = [&](double t) {
      double p = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) p *= G(j, t);
      }
      return p;
    };
    // Atom: nobody else above the reserve, bidder i clears it.
    double rev = rho * (1.0 - G(i, rho)) * others_cdf(rho);
    // Continuous part: payment is the highest competing bid t > rho.
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = std::max(cuts[c], rho);
      const double b = cuts[c + 1];
      if (b <= a) continue;
      const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / kMaxPanel)));
      const double width = (b - a) / panels;
      for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
          const double t = lo + 0.5 * width * (kGlNodes[k] + 1.0);
          double density = 0.0;  // pdf of max_{j != i} b_j at t
          for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double term = g(j, t);
            if (term == 0.0) continue;
            for (std::size_t l = 0; l < n; ++l) {
              if (l != i && l != j) term *= G(l, t);
            }
            density += term;
          }
          rev += 0.5 * width * kGlWeights[k] * t * (1.0 - G(i, t)) * density;
        }
      }
    }
    total += rev;
  }
  return total;
}

double integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                           std::vector<double> cuts, double max_panel) {
  if (!(hi > lo)) return 0.0;
  if (!(max_panel > 0.0)) throw std::invalid_argument("integrate_piecewise: panel width must be positive");
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = std::max(cuts[c], lo);
    const double b = std::min(cuts[c + 1], hi);
    if (b <= a) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double left = a + p * width;
      for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
        total += 0.5 * width * kGlWeights[k] * f(left + 0.5 * width * (kGlNodes[k] + 1.0));
      }
    }
  }
  return total;
}

}  // namespace club
