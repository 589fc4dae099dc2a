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

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "club/noise.hpp"
#include "club/rng.hpp"

namespace club {

// Stand-in for an infinite reserve. Valuations never exceed 3, so any reserve
// above 3 blocks a truthful sale identically; reserves at or above the sentinel
// block every bid.
inline constexpr double kNoReserve = 4.0;
inline constexpr double kMaxValuation = 3.0;

struct AuctionOutcome {
  std::optional<int> winner;
  std::vector<double> m;  // payment thresholds max(rho_i, max_{j != i} b_j)
  std::vector<int> q;     // win indicators
  double revenue = 0.0;
};

// One lazy second-price round with personalized reserves. The highest bidder
// (lowest index on ties) wins iff its bid clears its own reserve, paying m_i.
AuctionOutcome run_round(std::span<const double> bids, std::span<const double> reserves);

// x - (1 - F(x)) / f(x) for x in (-1, 1).
double virtual_value(const NoiseModel& noise, double x);
// Inverse of the virtual value by bisection on (-1, 1); targets below / above the
// range map to the support ends.
double inverse_virtual_value(const NoiseModel& noise, double target);
// Monopoly reserve 1 + mu + phi^{-1}(-1 - mu) for a bidder with mean reward mu.
double optimal_reserve_exact(const NoiseModel& noise, double mu);
// argmax over y in {0, step, ..., 3} of y * (1 - cdf(y - 1 - mu)); ties go to
// the smaller y.
double optimal_reserve_grid(const std::function<double(double)>& cdf, double mu, double grid_step);

struct RevenueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of the expected per-round revenue when bidder i bids
// truthfully v_i = 1 + mu_i + z_i. Copies of the same Rng give common random
// numbers across calls.
RevenueEstimate expected_revenue_mc(std::span<const double> mu, std::span<const double> reserves,
                                    const NoiseModel& noise, int samples, Rng& rng);

// Same expectation by one-dimensional quadrature over the payment threshold.
// Bidder i bids max(0, v_i + shift_i); empty `shifts` means truthful.
double expected_revenue_quadrature(std::span<const double> mu, std::span<const double> reserves,
                                   const NoiseModel& noise, std::span<const double> shifts = {});

// Composite 10-point Gauss-Legendre integral of f over [lo, hi], split at the
// given interior cuts and into panels no wider than max_panel.
double integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                           std::vector<double> cuts, double max_panel);

}  // namespace club
