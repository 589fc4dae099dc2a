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

#include "club/unknown.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "club/auction.hpp"

namespace club {

SimDraw simulation_draw(Rng& rng, int N) {
  if (N < 1) throw std::invalid_argument("simulation_draw: N must be >= 1");
  SimDraw d;
  d.selected = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(N)));
  d.rho = rng.uniform(0.0, kMaxValuation);
  return d;
}

SimDraw simulation_draw(std::uint64_t seed, long k, int h, int H, int N) {
  Rng rng = Rng(seed, "simulation").substream(static_cast<std::uint64_t>(k - 1) * H + h);
  return simulation_draw(rng, N);
}

SimOutcome simulate_outcome(std::span<const double> bids, const SimDraw& draw) {
  if (draw.selected < 0 || draw.selected >= static_cast<int>(bids.size())) {
    throw std::out_of_range("simulate_outcome: selected bidder out of range");
  }
  SimOutcome out{draw, std::vector<int>(bids.size(), 0)};
  out.q[draw.selected] = bids[draw.selected] >= draw.rho ? 1 : 0;
  return out;
}

std::vector<SimOutcome> simulate_outcomes(const std::vector<std::vector<double>>& bids, int N, Rng& rng) {
  std::vector<SimOutcome> out;
  out.reserve(bids.size());
  for (const auto& row : bids) {
    if (static_cast<int>(row.size()) != N) throw std::invalid_argument("simulate_outcomes: row size");
    out.push_back(simulate_outcome(row, simulation_draw(rng, N)));
  }
  return out;
}

std::vector<Eigen::VectorXd> fit_simulated_thetas(const std::vector<Eigen::MatrixXd>& gram,
                                                  const std::vector<Eigen::VectorXd>& rhs, int N,
                                                  double radius) {
  const int H = static_cast<int>(gram.size());
  if (static_cast<int>(rhs.size()) != N * H) throw std::invalid_argument("fit_simulated_thetas: sizes");
  std::vector<Eigen::VectorXd> theta(rhs.size());
  for (int i = 0; i < N; ++i)
    for (int h = 0; h < H; ++h) {
      const std::size_t slot = static_cast<std::size_t>(i) * H + h;
      theta[slot] = constrained_least_squares(gram[h], rhs[slot], radius).theta;
    }
  return theta;
}

JointEstimate joint_estimate(const SimulatedData& sim, const std::vector<Eigen::MatrixXd>& bids, int N,
                             double radius) {
  const int H = static_cast<int>(sim.phi.size());
  if (H == 0 || sim.q.size() != sim.phi.size() || bids.size() != sim.phi.size()) {
    throw std::invalid_argument("joint_estimate: inconsistent step counts");
  }
  std::vector<Eigen::MatrixXd> gram(H);
  std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(N) * H);
  Eigen::Index total = 0;
  for (int h = 0; h < H; ++h) {
    const auto& phi = sim.phi[h];
    if (sim.q[h].rows() != phi.rows() || sim.q[h].cols() != N || bids[h].rows() != phi.rows() ||
        bids[h].cols() != N) {
      throw std::invalid_argument("joint_estimate: inconsistent round counts");
    }
    total += phi.rows();
    gram[h] = phi.transpose() * phi;
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd y = (3.0 * N * sim.q[h].col(i).array() - 1.0).matrix();
      rhs[static_cast<std::size_t>(i) * H + h] = phi.transpose() * y;
    }
  }
  if (total == 0) throw std::invalid_argument("joint_estimate: no data");
  auto theta = fit_simulated_thetas(gram, rhs, N, radius);
  std::vector<double> residuals;
  residuals.reserve(static_cast<std::size_t>(total) * N);
  for (int h = 0; h < H; ++h)
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd mu = sim.phi[h] * theta[static_cast<std::size_t>(i) * H + h];
      for (Eigen::Index t = 0; t < mu.size(); ++t) {
        residuals.push_back(std::clamp(bids[h](t, i) - 1.0 - mu[t], -1.0, 1.0));
      }
    }
  return JointEstimate{std::move(theta), EmpiricalDist(std::move(residuals))};
}

bool is_power_of_two(long k) { return k >= 1 && (k & (k - 1)) == 0; }

bool unknown_update_due(long k, bool cov_trigger) {
  if (k < 1) throw std::invalid_argument("unknown_update_due: k must be >= 1");
  return cov_trigger || is_power_of_two(k);
}

double empirical_reserve(const EmpiricalDist& fhat, double mu_hat, double grid_step) {
  return optimal_reserve_grid([&](double z) { return fhat.cdf(z); }, mu_hat, grid_step);
}

double extra_bonus_term(double coef, long buffer_end) {
  if (buffer_end < 1) throw std::invalid_argument("extra_bonus_term: buffer end must be >= 1");
  return coef / std::sqrt(static_cast<double>(buffer_end));
}

void lsvi_backward_unknown(LsviInputs in, double bonus2_coef, long buffer_end, PolicyEstimate& out) {
  in.extra_bonus = extra_bonus_term(bonus2_coef, buffer_end);
  lsvi_backward(in, out);
}

void write_fhat_csv(std::ostream& os, const EmpiricalDist& fhat, int points) {
  if (points < 2) throw std::invalid_argument("write_fhat_csv: need at least two points");
  os << "x,fhat\n";
  char buf[96];
  for (int p = 0; p < points; ++p) {
    const double x = -1.0 + 2.0 * p / (points - 1);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, fhat.cdf(x));
    os << buf;
  }
}

double sup_cdf_distance(const EmpiricalDist& fhat, const NoiseModel& truth) {
  double sup = 0.0;
  auto probe = [&](double x) { sup = std::max(sup, std::abs(fhat.cdf(x) - truth.cdf(x))); };
  constexpr int kGrid = 20000;
  for (int p = 0; p <= kGrid; ++p) probe(-1.0 + 2.0 * p / kGrid);
  for (double s : fhat.sorted()) probe(s);
  return sup;
}

}  // namespace club
