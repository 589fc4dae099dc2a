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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "club/auction.hpp"
#include "club/env.hpp"
#include "club/harness.hpp"
#include "club/unknown.hpp"
#include "support/test_support.hpp"

namespace club {
namespace {

TEST(Simulation, CeilingAndFloorBids) {
  Rng r(1, "simulation");
  int ceiling = 0, floor = 0;
  for (int t = 0; t < 20000; ++t) {
    const SimDraw d = simulation_draw(r, 2);
    ASSERT_GE(d.rho, 0.0);
    ASSERT_LE(d.rho, 3.0);
    const auto top = simulate_outcome(std::vector<double>{3.0, 3.0}, d);
    const auto low = simulate_outcome(std::vector<double>{0.0, 0.0}, d);
    ceiling += top.q[d.selected];
    floor += low.q[d.selected];
    ASSERT_EQ(top.q[1 - d.selected], 0);
  }
  EXPECT_EQ(ceiling, 20000);
  EXPECT_EQ(floor, 0);
}

TEST(Simulation, WinRateMatchesMeanReward) {
  const EnvSpec env = testing::reference_env();
  const int N = 2, rounds = 100000;
  Rng vals(2, "valuations"), sims(2, "simulation");
  std::vector<std::vector<double>> bids;
  for (int t = 0; t < rounds; ++t) bids.push_back(sample_valuations(env, 1, 0, 1, vals));
  const auto out = simulate_outcomes(bids, N, sims);
  for (int i = 0; i < N; ++i) {
    double hits = 0.0;
    for (const auto& o : out) hits += o.q[i];
    const double p = (1.0 + env.mean_reward(i, 1, 0, 1)) / (3.0 * N);
    EXPECT_NEAR(hits / rounds, p, 3.0 * std::sqrt(p * (1 - p) / rounds));
  }
  for (const auto& o : out) {
    int ones = 0;
    for (int q : o.q) ones += q;
    ASSERT_LE(ones, 1);
  }
}

TEST(Simulation, FrozenPerEpisodeStep) {
  const SimDraw a = simulation_draw(7, 12, 1, 3, 4);
  const SimDraw b = simulation_draw(7, 12, 1, 3, 4);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.rho, b.rho);
  const SimDraw c = simulation_draw(7, 12, 2, 3, 4);
  EXPECT_NE(a.rho, c.rho);
}

TEST(Simulation, LeavesTranscriptUntouched) {
  const std::vector<double> bids{1.2, 2.4, 0.7};
  const std::vector<double> reserves{1.0, 1.0, 1.0};
  const auto before = run_round(bids, reserves);
  Rng r(3, "simulation");
  std::vector<std::vector<double>> rows(50, bids);
  const auto copy = rows;
  simulate_outcomes(rows, 3, r);
  EXPECT_EQ(rows, copy);
  const auto after = run_round(bids, reserves);
  EXPECT_EQ(before.q, after.q);
  EXPECT_EQ(before.revenue, after.revenue);
  // Environment streams are keyed by label, so drawing simulations cannot shift them.
  Rng env_a(3, "env_transitions"), env_b(3, "env_transitions");
  Rng sim(3, "simulation");
  for (int t = 0; t < 100; ++t) simulation_draw(sim, 3);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(env_a.next_u64(), env_b.next_u64());
}

SimulatedData simulated_rounds(const EnvSpec& env, int rounds, std::uint64_t seed,
                               std::vector<Eigen::MatrixXd>& bids_out) {
  const auto& d = env.dims;
  SimulatedData sim;
  Rng pick(seed, "pairs"), vals(seed, "valuations"), sims(seed, "simulation");
  bids_out.clear();
  for (int h = 0; h < d.H; ++h) {
    Eigen::MatrixXd phi(rounds, d.d), q(rounds, d.N), b(rounds, d.N);
    for (int t = 0; t < rounds; ++t) {
      const int x = static_cast<int>(pick.uniform_index(d.S));
      const int u = static_cast<int>(pick.uniform_index(d.U));
      phi.row(t) = env.feature(x, u).transpose();
      const auto v = sample_valuations(env, h, x, u, vals);
      const auto o = simulate_outcome(v, simulation_draw(sims, d.N));
      for (int i = 0; i < d.N; ++i) {
        b(t, i) = v[i];
        q(t, i) = o.q[i];
      }
    }
    sim.phi.push_back(phi);
    sim.q.push_back(q);
    bids_out.push_back(b);
  }
  return sim;
}

TEST(JointEstimate, RecoversNoiseDistribution) {
  const EnvSpec env = testing::reference_env();
  std::vector<Eigen::MatrixXd> bids;
  const SimulatedData sim = simulated_rounds(env, 20000, 4, bids);
  const auto est = joint_estimate(sim, bids, env.dims.N, 2.0 * std::sqrt(6.0));
  EXPECT_LE(sup_cdf_distance(est.fhat, env.noise), 0.05);
  for (int i = 0; i < 2; ++i)
    for (int h = 0; h < 3; ++h)
      EXPECT_LE((est.theta[i * 3 + h] - env.theta_of(i, h)).norm(), 0.25);
}

TEST(JointEstimate, ExactParametersGiveNoiseDraws) {
  const EnvSpec env = testing::reference_env();
  Rng vals(5, "valuations");
  std::vector<double> residuals;
  for (int t = 0; t < 50000; ++t) {
    const auto v = sample_valuations(env, 0, 2, 0, vals);
    for (int i = 0; i < 2; ++i) residuals.push_back(v[i] - 1.0 - env.mean_reward(i, 0, 2, 0));
  }
  const EmpiricalDist fhat(residuals);
  EXPECT_LE(sup_cdf_distance(fhat, env.noise), dkw_band(residuals.size(), 0.01) + 1e-4);
}

TEST(JointEstimate, SingleRoundIsOneStep) {
  SimulatedData sim;
  sim.phi.push_back(Eigen::MatrixXd::Ones(1, 1));
  sim.q.push_back(Eigen::MatrixXd::Zero(1, 1));
  std::vector<Eigen::MatrixXd> bids{Eigen::MatrixXd::Constant(1, 1, 1.5)};
  const auto est = joint_estimate(sim, bids, 1, 2.0);
  EXPECT_EQ(est.fhat.size(), 1u);
  const double z = est.fhat.sorted()[0];
  EXPECT_EQ(est.fhat.cdf(z - 1e-9), 0.0);
  EXPECT_EQ(est.fhat.cdf(z), 1.0);
}

TEST(JointEstimate, RejectsEmptyData) {
  SimulatedData sim;
  sim.phi.push_back(Eigen::MatrixXd(0, 2));
  sim.q.push_back(Eigen::MatrixXd(0, 1));
  std::vector<Eigen::MatrixXd> bids{Eigen::MatrixXd(0, 1)};
  EXPECT_THROW(joint_estimate(sim, bids, 1, 2.0), std::invalid_argument);
}

TEST(ForcedUpdates, PowerOfTwoRule) {
  EXPECT_TRUE(unknown_update_due(64, false));
  EXPECT_FALSE(unknown_update_due(6, false));
  EXPECT_TRUE(unknown_update_due(6, true));
  EXPECT_TRUE(unknown_update_due(1, false));
  EXPECT_THROW(unknown_update_due(0, false), std::invalid_argument);
  EXPECT_FALSE(is_power_of_two(0));
  EXPECT_TRUE(is_power_of_two(1L << 40));
}

TEST(EmpiricalReserve, UniformResiduals) {
  std::vector<double> s(1000000);
  Rng r(6, "residuals");
  for (auto& x : s) x = r.uniform(-1.0, 1.0);
  const EmpiricalDist fhat(std::move(s));
  EXPECT_NEAR(empirical_reserve(fhat, 0.0, 1e-3), 1.0, 0.02);
  // An empirical hazard is not monotone, so only track 1 + mu / 2 loosely.
  for (int k = 0; k <= 20; ++k) EXPECT_NEAR(empirical_reserve(fhat, k / 20.0, 1e-3), 1.0 + k / 40.0, 0.03);
}

TEST(EmpiricalReserve, PointMassResiduals) {
  const EmpiricalDist fhat(std::vector<double>(100, 0.0));
  for (double mu : {0.0, 0.25, 0.8}) {
    const double y = empirical_reserve(fhat, mu, 1e-3);
    EXPECT_LE(y, 1.0 + mu);
    EXPECT_GE(y, 1.0 + mu - 1e-3 - 1e-12);
  }
}

TEST(ExtraBonus, Scaling) {
  EXPECT_DOUBLE_EQ(extra_bonus_term(0.18, 100), 0.018);
  EXPECT_DOUBLE_EQ(extra_bonus_term(0.18, 400), 0.5 * extra_bonus_term(0.18, 100));
  EXPECT_THROW(extra_bonus_term(1.0, 0), std::invalid_argument);
}

struct ToyInputs {
  EnvSpec env;
  TableShape shape;
  TransitionCounts counts;
  std::vector<Eigen::MatrixXd> inv;
};

ToyInputs toy_inputs() {
  ToyInputs t{testing::deterministic_env(2, 2, 3, 2, 6), TableShape{3, 2, 2, 2}, TransitionCounts(3, 2, 2), {}};
  for (int h = 0; h < 3; ++h) {
    Eigen::MatrixXd lam = Eigen::MatrixXd::Identity(4, 4);
    for (int x = 0; x < 2; ++x)
      for (int u = 0; u < 2; ++u) {
        const double w = 5.0 + x + 2 * u;
        t.counts.add(h, x, u, (x + u + h) % 2, w);
        const Eigen::VectorXd f = t.env.feature(x, u);
        lam += w * f * f.transpose();
      }
    t.inv.push_back(lam.inverse());
  }
  return t;
}

TEST(LsviUnknown, ZeroExtraBonusReducesToKnown) {
  const ToyInputs t = toy_inputs();
  const std::vector<double> rev{0.4, 0.7, 0.2, 0.9, 0.5, 0.5, 0.6, 0.1, 0.3, 0.8, 0.7, 0.2};
  LsviInputs in{t.shape, &t.env.phi, &t.counts, &rev, &t.inv, 0.2, 0.0, 0.0};
  PolicyEstimate a, b;
  lsvi_backward(in, a);
  lsvi_backward_unknown(in, 0.0, 50, b);
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.greedy, b.greedy);
  PolicyEstimate c;
  lsvi_backward_unknown(in, 1.0, 100, c);
  EXPECT_DOUBLE_EQ(c.extra_bonus, 0.1);
  for (std::size_t k = 0; k < a.q.size(); ++k) EXPECT_GE(c.q[k], a.q[k]);
}

TEST(LsviUnknown, ExactNoiseEstimateMatchesKnownPipeline) {
  const ToyInputs t = toy_inputs();
  const NoiseModel u = NoiseModel::uniform();
  // Evenly spaced quantiles: an empirical cdf essentially equal to F.
  std::vector<double> z(20001);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = -1.0 + 2.0 * k / (z.size() - 1);
  const EmpiricalDist fhat(z);

  const auto known_rho = reserve_table(t.env.theta, t.env.phi, t.shape, [&](double mu) {
    return optimal_reserve_grid([&](double x) { return u.cdf(x); }, mu, 1e-3);
  });
  const auto emp_rho = reserve_table(t.env.theta, t.env.phi, t.shape,
                                     [&](double mu) { return empirical_reserve(fhat, mu, 1e-3); });
  for (std::size_t k = 0; k < known_rho.size(); ++k) EXPECT_NEAR(known_rho[k], emp_rho[k], 1e-3 + 1e-9);

  const int samples = 100000;
  Rng r1(8, "mc_revenue"), r2(8, "mc_revenue");
  const auto rev_known = estimate_revenue_table(t.env.theta, t.env.phi, t.shape, known_rho,
                                                [&](double p) { return u.quantile(p); }, samples, r1);
  const auto rev_emp = estimate_revenue_table(t.env.theta, t.env.phi, t.shape, emp_rho,
                                              [&](double p) { return fhat.quantile(p); }, samples, r2);
  PolicyEstimate a, b;
  LsviInputs in{t.shape, &t.env.phi, &t.counts, &rev_known, &t.inv, 0.0, 0.0, 0.0};
  lsvi_backward(in, a);
  in.revenue = &rev_emp;
  lsvi_backward_unknown(in, 0.0, 10, b);
  // Revenue per cell is at most 3, so three MC standard errors are below 3 * 3 / sqrt(n) per step.
  const double tol = 3.0 * 3.0 * 3.0 / std::sqrt(static_cast<double>(samples)) * 3;
  for (std::size_t k = 0; k < a.q.size(); ++k) EXPECT_NEAR(a.q[k], b.q[k], tol);
}

TEST(FhatCsv, HeaderAndRows) {
  const EmpiricalDist fhat({-0.5, 0.5});
  std::ostringstream os;
  write_fhat_csv(os, fhat, 5);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x,fhat");
  std::vector<std::string> rows;
  while (std::getline(is, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[2], "0,0.5");
  EXPECT_EQ(rows[4], "1,1");
}

TEST(UnknownRun, ScheduleProperties) {
  ExperimentConfig cfg;
  cfg.variant = SellerVariant::kUnknownNoise;
  cfg.K = 400;
  cfg.mc_samples = 1024;
  for (std::uint64_t seed : {1u, 2u}) {
    const auto res = run_experiment(cfg, seed);
    const auto& s = res.summary;
    EXPECT_LE(s.forced_buffers, static_cast<int>(std::floor(std::log2(cfg.K))) + 1);
    EXPECT_EQ(s.k_bound_violations, 0);
    ASSERT_TRUE(s.fhat_sup_error.has_value());
    EXPECT_GE(*s.fhat_sup_error, 0.0);
    EXPECT_LE(*s.fhat_sup_error, 1.0);
  }
}

}  // namespace
}  // namespace club
