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
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "club/env.hpp"
#include "club/seller.hpp"
#include "club/unknown.hpp"

namespace club {

// How expected per-round revenue is computed: deterministic quadrature when
// mc_samples == 0, otherwise Monte Carlo with common random numbers per cell.
struct RevenueMethod {
  int mc_samples = 0;
  std::uint64_t seed = 0;
};

struct OracleSolution {
  TableShape shape;
  std::vector<double> reward;    // R*(h, x, item) under Myerson reserves
  std::vector<double> reserves;  // per (cell, bidder)
  std::vector<double> value;     // V*_h(x), (H + 1) x S with a zero last row
  std::vector<int> best_item;    // per (h, x)

  double v(int h, int x) const { return value.at(static_cast<std::size_t>(h) * shape.S + x); }
};

OracleSolution optimal_dp(const EnvSpec& env, const RevenueMethod& method = {});

// 64-bit hash of the serialized environment.
std::uint64_t env_fingerprint(const EnvSpec& env);

// optimal_dp memoized per (fingerprint, method); safe to call from several threads.
std::shared_ptr<const OracleSolution> cached_optimal_dp(const EnvSpec& env, const RevenueMethod& method = {});

// A stationary-per-episode policy in explicit form.
struct EvalPolicy {
  TableShape shape;
  std::vector<double> item_prob;  // per cell
  std::vector<double> reserves;   // per (cell, bidder)
  std::vector<char> random_step;  // per h: pi_rand acts at this step
};

// Greedy (or uniform, when cold) items with the policy's reserves; steps whose
// bit is set in `rand_mask` are played by pi_rand.
EvalPolicy eval_policy(const PolicyEstimate& p, unsigned rand_mask = 0);
EvalPolicy eval_policy(const OracleSolution& s);

// Expected revenue of one pi_rand round at (h, x, item): bidder and reserve
// uniform, everyone else priced out. `shifts` as in expected_revenue_quadrature.
double pi_rand_revenue(const EnvSpec& env, int h, int x, int item, std::span<const double> shifts = {});

// V_h(x) for every (h, x), (H + 1) x S. `rand_revenue` (per cell) is computed
// on demand when null and a random step is present.
std::vector<double> policy_values(const EnvSpec& env, const EvalPolicy& p, const RevenueMethod& method = {},
                                  std::span<const double> shifts = {},
                                  const std::vector<double>* rand_revenue = nullptr);

double policy_value(const EnvSpec& env, const EvalPolicy& p, const RevenueMethod& method = {},
                    std::span<const double> shifts = {});

// Per-run memo of policy values keyed by (policy id, random-step mask, shifts).
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const EnvSpec& env) : env_(env) {}
  double value(const PolicyEstimate& p, unsigned rand_mask, std::span<const double> shifts);
  const std::vector<double>& rand_revenue(std::span<const double> shifts);

 private:
  const EnvSpec& env_;
  std::map<std::tuple<int, unsigned, std::vector<double>>, double> values_;
  std::map<std::vector<double>, std::vector<double>> rand_tables_;
};

// Lie test for one round: some bidder whose bid differs from their valuation
// would have flipped their own win indicator 1(b_i >= m_i) by bidding
// truthfully against the same reserves and opponents' bids.
bool round_is_lie(std::span<const double> valuations, std::span<const double> bids,
                  std::span<const double> reserves);

// Same test against the simulated outcome: 1(v >= rho~) vs 1(b >= rho~) for the
// selected bidder.
bool simulated_is_lie(std::span<const double> valuations, std::span<const double> bids, const SimDraw& draw);

enum class DeltaBucket { kNormal, kBuffer, kPiRand, kLie };
std::string_view bucket_name(DeltaBucket b);

struct EpisodeTags {
  bool in_buffer = false;
  bool used_pi_rand = false;
  bool lie = false;
};

// buffer > pi_rand > lie > normal.
DeltaBucket classify(const EpisodeTags& tags);

struct LedgerRow {
  long episode = 0;
  int k_tilde = 0;
  EpisodeTags tags;
  double policy_value = 0.0;
  double truthful_value = 0.0;
  double optimal_value = 0.0;
  double suboptimality = 0.0;
  double cum_regret = 0.0;
  DeltaBucket bucket = DeltaBucket::kNormal;
};

// Delta_1..Delta_5 sums. Normal episodes split their suboptimality into
// Delta_1 = V* - V_truthful and Delta_5 = V_truthful - V_realized.
struct DeltaTotals {
  double delta[5] = {0, 0, 0, 0, 0};
  long episodes[4] = {0, 0, 0, 0};  // per DeltaBucket
  double sum() const { return delta[0] + delta[1] + delta[2] + delta[3] + delta[4]; }
};

class RegretLedger {
 public:
  const LedgerRow& record_episode(long k, int k_tilde, const EpisodeTags& tags, double policy_value,
                                  double truthful_value, double optimal_value);
  const std::vector<LedgerRow>& rows() const { return rows_; }
  const DeltaTotals& totals() const { return totals_; }
  double cum_regret() const { return rows_.empty() ? 0.0 : rows_.back().cum_regret; }

 private:
  std::vector<LedgerRow> rows_;
  DeltaTotals totals_;
};

struct SlopeFit {
  double alpha = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of log regret on log K.
SlopeFit slope_fit(std::span<const double> K, std::span<const double> regret);

}  // namespace club
