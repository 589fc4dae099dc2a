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
#include <vector>

#include <gtest/gtest.h>

#include "club/auction.hpp"
#include "club/oracle.hpp"
#include "club/seller.hpp"
#include "support/test_support.hpp"

namespace club {
namespace {

EnvSpec two_item_monopoly() {
  EnvSpec env = build_tabular_env({2, 1, 1, 1, 2}, NoiseModel::uniform(), 0.9, 1);
  env.theta[0] << 0.0, 0.5;
  return env;
}

TEST(OptimalDp, SingleBidderClosedForm) {
  const EnvSpec env = two_item_monopoly();
  const auto sol = optimal_dp(env);
  EXPECT_NEAR(sol.v(0, 0), 1.25 * 1.25 / 2.0, 1e-10);
  EXPECT_EQ(sol.best_item[0], 1);
  EXPECT_NEAR(sol.reserves[sol.shape.reserve_slot(0, 0, 1, 0)], 1.25, 1e-6);
}

TEST(OptimalDp, MonteCarloAgreesWithQuadrature) {
  const EnvSpec env = testing::reference_env();
  const auto quad = optimal_dp(env);
  const auto mc = optimal_dp(env, RevenueMethod{200000, 3});
  for (std::size_t c = 0; c < quad.reward.size(); ++c) EXPECT_NEAR(quad.reward[c], mc.reward[c], 0.01);
  EXPECT_NEAR(quad.v(0, 0), mc.v(0, 0), 0.02);
}

TEST(OptimalDp, NeverSellingIsWorthZero) {
  const EnvSpec env = testing::deterministic_env(2, 2, 3, 2);
  const auto sol = optimal_dp(env);
  EvalPolicy p = eval_policy(sol);
  std::fill(p.reserves.begin(), p.reserves.end(), kNoReserve);
  EXPECT_EQ(policy_value(env, p), 0.0);
  std::fill(p.reserves.begin(), p.reserves.end(), 3.2);
  EXPECT_EQ(policy_value(env, p), 0.0);
}

TEST(OptimalDp, DominatesRandomPolicies) {
  const EnvSpec env = testing::reference_env(3);
  const auto sol = optimal_dp(env);
  const auto values = policy_values(env, eval_policy(sol));
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 3; ++x) EXPECT_NEAR(values[h * 3 + x], sol.v(h, x), 1e-12);
  Rng r(4, "policies");
  for (int t = 0; t < 5; ++t) {
    EvalPolicy p = eval_policy(sol);
    for (int h = 0; h < 3; ++h)
      for (int x = 0; x < 3; ++x) {
        const int pick = static_cast<int>(r.uniform_index(2));
        for (int u = 0; u < 2; ++u) p.item_prob[sol.shape.cell(h, x, u)] = u == pick ? 1.0 : 0.0;
      }
    for (auto& rho : p.reserves) rho = r.uniform(0.0, 3.0);
    const auto v = policy_values(env, p);
    for (int h = 0; h < 3; ++h)
      for (int x = 0; x < 3; ++x) EXPECT_LE(v[h * 3 + x], sol.v(h, x) + 1e-12);
  }
}

TEST(OptimalDp, ItemRelabelingInvariance) {
  const EnvSpec env = testing::reference_env(5);
  EnvSpec swapped = env;
  // Swap items 0 and 1 in every state: rows x*U + 0 and x*U + 1 of phi.
  for (int x = 0; x < 3; ++x) swapped.phi.row(x * 2).swap(swapped.phi.row(x * 2 + 1));
  const auto a = optimal_dp(env);
  const auto b = optimal_dp(swapped);
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 3; ++x) {
      EXPECT_NEAR(a.v(h, x), b.v(h, x), 1e-12);
      EXPECT_EQ(a.best_item[h * 3 + x], 1 - b.best_item[h * 3 + x]);
    }
}

TEST(OptimalDp, CachedMatchesDirect) {
  const EnvSpec env = testing::reference_env(6);
  const auto a = cached_optimal_dp(env);
  const auto b = cached_optimal_dp(env);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_EQ(a->value, optimal_dp(env).value);
  EnvSpec other = env;
  other.theta[0](0) = 0.123;
  EXPECT_NE(env_fingerprint(env), env_fingerprint(other));
}

TEST(PolicyValue, ColdPolicyAveragesItems) {
  const EnvSpec env = two_item_monopoly();
  PolicyEstimate cold = cold_start_policy(env.dims);
  std::fill(cold.reserves.begin(), cold.reserves.end(), 1.0);
  // Item means 0 and 0.5 at reserve 1: revenues (2 - 1)/2 and (2.5 - 1)/2.
  EXPECT_NEAR(policy_value(env, eval_policy(cold)), 0.5 * (0.5 + 0.75), 1e-12);
}

TEST(PolicyValue, RandomStepsMatchRollouts) {
  const EnvSpec env = testing::reference_env(7);
  const PolicyEstimate p = cold_start_policy(env.dims);
  const double value = policy_value(env, eval_policy(p, 0b111));
  Rng r(8, "rollout");
  const int episodes = 10000;
  double sum = 0.0, sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    int x = env.initial_state;
    double total = 0.0;
    for (int h = 0; h < 3; ++h) {
      const Action a = pi_rand(env.dims.N, env.dims.U, r);
      const auto v = sample_valuations(env, h, x, a.item, r);
      total += run_round(v, a.reserves).revenue;
      x = sample_transition(env, h, x, a.item, r);
    }
    sum += total;
    sq += total * total;
  }
  const double mean = sum / episodes;
  const double se = std::sqrt((sq / episodes - mean * mean) / episodes);
  EXPECT_LE(std::abs(mean - value), 3.0 * se);
}

TEST(PolicyValue, PiRandRevenueByHand) {
  // One bidder, mean 0: E over rho ~ U[0,3] of rho (2 - rho)/2 on [0, 2].
  EnvSpec env = two_item_monopoly();
  const double expected = (1.0 / 3.0) * (2.0 * 2.0 / 2.0 - 8.0 / 6.0);
  EXPECT_NEAR(pi_rand_revenue(env, 0, 0, 0), expected, 1e-12);
}

TEST(PolicyValue, ShiftsRequireQuadrature) {
  const EnvSpec env = testing::reference_env();
  const auto sol = optimal_dp(env);
  const std::vector<double> shifts{0.3, 0.0};
  EXPECT_THROW(policy_value(env, eval_policy(sol), RevenueMethod{100, 1}, shifts), std::invalid_argument);
  EXPECT_NO_THROW(policy_value(env, eval_policy(sol), RevenueMethod{}, shifts));
}

TEST(LieTest, Cases) {
  // Bidder 0 overbids from 1.0 to 1.6 and flips a loss into a win.
  EXPECT_TRUE(round_is_lie(std::vector<double>{1.0, 1.2}, std::vector<double>{1.6, 1.2},
                           std::vector<double>{0.0, 0.0}));
  // Overbid without changing anything.
  EXPECT_FALSE(round_is_lie(std::vector<double>{2.0, 1.2}, std::vector<double>{2.3, 1.2},
                            std::vector<double>{0.0, 0.0}));
  // Priced out: the bid cannot matter.
  EXPECT_FALSE(round_is_lie(std::vector<double>{1.0, 1.2}, std::vector<double>{2.9, 1.2},
                            std::vector<double>{kNoReserve, 0.0}));
  // Underbid below own reserve.
  EXPECT_TRUE(round_is_lie(std::vector<double>{1.5}, std::vector<double>{1.1}, std::vector<double>{1.3}));
  EXPECT_FALSE(round_is_lie(std::vector<double>{1.5, 0.2}, std::vector<double>{1.5, 0.2},
                            std::vector<double>{0.0, 0.0}));

  const SimDraw d{1, 1.0};
  EXPECT_TRUE(simulated_is_lie(std::vector<double>{0.5, 0.9}, std::vector<double>{0.5, 1.1}, d));
  EXPECT_FALSE(simulated_is_lie(std::vector<double>{0.5, 1.9}, std::vector<double>{0.5, 1.1}, d));
}

TEST(Ledger, BucketPrecedenceAndTotals) {
  RegretLedger led;
  EpisodeTags all{true, true, true};
  EXPECT_EQ(led.record_episode(1, 0, all, 1.0, 1.0, 2.0).bucket, DeltaBucket::kBuffer);
  EXPECT_EQ(led.record_episode(2, 0, {false, true, true}, 1.5, 1.5, 2.0).bucket, DeltaBucket::kPiRand);
  EXPECT_EQ(led.record_episode(3, 0, {false, false, true}, 1.8, 1.8, 2.0).bucket, DeltaBucket::kLie);
  const auto& n = led.record_episode(4, 1, {}, 1.7, 1.9, 2.0);
  EXPECT_EQ(n.bucket, DeltaBucket::kNormal);
  EXPECT_EQ(bucket_name(n.bucket), "normal");
  const auto& t = led.totals();
  EXPECT_DOUBLE_EQ(t.delta[1], 1.0);
  EXPECT_DOUBLE_EQ(t.delta[2], 0.5);
  EXPECT_DOUBLE_EQ(t.delta[3], 0.2);
  EXPECT_NEAR(t.delta[0], 0.1, 1e-15);
  EXPECT_NEAR(t.delta[4], 0.2, 1e-15);
  EXPECT_NEAR(t.sum(), led.cum_regret(), 1e-12);
  EXPECT_EQ(t.episodes[static_cast<int>(DeltaBucket::kBuffer)], 1);
  EXPECT_EQ(t.episodes[static_cast<int>(DeltaBucket::kNormal)], 1);
  EXPECT_DOUBLE_EQ(led.rows().back().cum_regret, 1.0 + 0.5 + 0.2 + 0.3);
}

TEST(SlopeFit, ExactPowerLaws) {
  const std::vector<double> K{500, 1000, 2000, 4000};
  std::vector<double> sq, lin;
  for (double k : K) {
    sq.push_back(3.0 * std::sqrt(k));
    lin.push_back(0.2 * k);
  }
  const auto a = slope_fit(K, sq);
  EXPECT_NEAR(a.alpha, 0.5, 1e-12);
  EXPECT_NEAR(a.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(a.r2, 1.0, 1e-12);
  EXPECT_NEAR(slope_fit(K, lin).alpha, 1.0, 1e-12);
}

TEST(SlopeFit, NoisyPowerLaw) {
  std::vector<double> K;
  for (int j = 0; j < 10; ++j) K.push_back(100.0 * std::pow(1000.0, j / 9.0));
  Rng r(9, "slope");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> y;
    for (double k : K) y.push_back(2.0 * std::pow(k, 0.6) * r.uniform(0.95, 1.05));
    EXPECT_NEAR(slope_fit(K, y).alpha, 0.6, 0.05);
  }
}

TEST(SlopeFit, RejectsBadInput) {
  const std::vector<double> K{1, 2, 3};
  EXPECT_THROW(slope_fit(K, std::vector<double>{1.0, 0.0, 2.0}), std::domain_error);
  EXPECT_THROW(slope_fit(K, std::vector<double>{1.0, -1.0, 2.0}), std::domain_error);
  EXPECT_THROW(slope_fit(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
  EXPECT_THROW(slope_fit(std::vector<double>{2, 2}, std::vector<double>{1, 3}), std::invalid_argument);
}

}  // namespace
}  // namespace club
