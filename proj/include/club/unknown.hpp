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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "club/numerics.hpp"
#include "club/rng.hpp"
#include "club/seller.hpp"

namespace club {

// Virtual reserve draw for one (episode, step): bidder `selected` faces
// reserve `rho`, every other bidder is priced out.
struct SimDraw {
  int selected = 0;
  double rho = 0.0;
};

struct SimOutcome {
  SimDraw draw;
  std::vector<int> q;  // q~ per bidder; only the selected entry can be 1
};

SimDraw simulation_draw(Rng& rng, int N);

// Frozen draw for (k, h): a pure function of the seed, so the seller and any
// auditor see the same virtual reserves.
SimDraw simulation_draw(std::uint64_t seed, long k, int h, int H, int N);

SimOutcome simulate_outcome(std::span<const double> bids, const SimDraw& draw);

// One outcome per logged round (rows of N bids). Uses only `rng`.
std::vector<SimOutcome> simulate_outcomes(const std::vector<std::vector<double>>& bids, int N, Rng& rng);

// q~ targets: 3N q~ - 1 regressed on phi per (bidder, step).
struct SimulatedData {
  std::vector<Eigen::MatrixXd> phi;  // per h, rounds x d
  std::vector<Eigen::MatrixXd> q;    // per h, rounds x N
};

struct JointEstimate {
  std::vector<Eigen::VectorXd> theta;  // index i * H + h
  EmpiricalDist fhat;
};

// theta_ih from the simulated outcomes, then F-hat from the pooled residuals
// b - 1 - <phi, theta_ih> clamped to [-1, 1]. `bids[h]` is rounds x N.
JointEstimate joint_estimate(const SimulatedData& sim, const std::vector<Eigen::MatrixXd>& bids, int N,
                             double radius);

// theta_ih from accumulated sufficient statistics (Gram per h, rhs per (i, h)).
std::vector<Eigen::VectorXd> fit_simulated_thetas(const std::vector<Eigen::MatrixXd>& gram,
                                                  const std::vector<Eigen::VectorXd>& rhs, int N,
                                                  double radius);

bool is_power_of_two(long k);
bool unknown_update_due(long k, bool cov_trigger);

// argmax over y in {0, step, ..., 3} of y (1 - F-hat(y - 1 - mu_hat)); ties to the smaller y.
double empirical_reserve(const EmpiricalDist& fhat, double mu_hat, double grid_step);

// coef / sqrt(buffer_end)
double extra_bonus_term(double coef, long buffer_end);

// lsvi_backward plus the state-independent term coef / sqrt(buffer_end) inside the clip.
void lsvi_backward_unknown(LsviInputs in, double bonus2_coef, long buffer_end, PolicyEstimate& out);

// (x, F-hat(x)) pairs on an even grid of `points` values over [-1, 1].
void write_fhat_csv(std::ostream& os, const EmpiricalDist& fhat, int points = 201);

// sup over [-1, 1] of |F-hat - F|, checked on a fine grid and at every sample.
double sup_cdf_distance(const EmpiricalDist& fhat, const NoiseModel& truth);

}  // namespace club
