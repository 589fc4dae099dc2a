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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "club/auction.hpp"
#include "club/env.hpp"
#include "club/noise.hpp"
#include "club/numerics.hpp"
#include "club/rng.hpp"

namespace club {

// What the seller is allowed to know about the world: shapes, the feature map,
// the discount factor of the bidders and (for the known-noise variant) F.
struct MarketInfo {
  EnvDims dims;
  Eigen::MatrixXd phi;  // (S*U) x d
  double gamma = 0.9;
  NoiseModel noise = NoiseModel::uniform();
  int initial_state = 0;
};

MarketInfo market_info(const EnvSpec& env);

enum class SellerVariant { kKnownNoise, kUnknownNoise };

// Covariance condition that opens a buffer period.
enum class TriggerRule {
  kLoewner,  // Lambda_new >= 2 Lambda_ref in the Loewner order for some h
  kLogdet,   // det Lambda_new >= 2 det Lambda_ref for some h
};

struct SellerConfig {
  SellerVariant variant = SellerVariant::kKnownNoise;
  long K = 1;
  double c_b = 0.05;
  double c_r = 0.01;
  double bonus2 = 0.02;  // multiplied by H^2
  int mc_samples = 4096;
  double grid_step = 1e-3;
  TriggerRule trigger = TriggerRule::kLogdet;
  int fit_starts = 8;
  int fit_max_iters = 500;
};

// c_b H^{3/2} ln(K+1) + c_r H ln^2(K+1)
double bonus_coefficient(double c_b, double c_r, int H, long K);

// ceil(3 ln k / ln(1/gamma)) episodes.
long buffer_length(long k, double gamma);

class BufferSchedule {
 public:
  struct Period {
    long start = 1;
    long end = 1;
  };

  // Number of completed updates (k tilde).
  int k_tilde() const { return static_cast<int>(done_.size()) - 1; }
  // Period of the latest completed update; {1, 1} before any.
  const Period& last() const { return done_.back(); }
  const std::vector<Period>& completed() const { return done_; }
  bool active() const { return pending_.has_value(); }
  const std::optional<Period>& pending() const { return pending_; }

  // Opens [k, k + buffer_length(k)); requires no active period.
  const Period& open(long k, double gamma);
  bool due(long k) const { return pending_ && pending_->end == k; }
  // Closes the active period; k tilde advances.
  void complete();
  // True while a buffer is open and k precedes its end.
  bool in_buffer(long k) const { return pending_ && k >= pending_->start && k < pending_->end; }

 private:
  std::vector<Period> done_{Period{}};
  std::optional<Period> pending_;
};

// Layout helpers for per-(h, x, item) tables.
struct TableShape {
  int H = 0, S = 0, U = 0, N = 0;
  std::size_t cell(int h, int x, int item) const {
    return (static_cast<std::size_t>(h) * S + x) * U + item;
  }
  std::size_t cells() const { return static_cast<std::size_t>(H) * S * U; }
  std::size_t reserve_slot(int h, int x, int item, int i) const { return cell(h, x, item) * N + i; }
};

struct PolicyEstimate {
  int id = 0;  // k tilde of the update that produced it
  bool cold = true;
  TableShape shape;
  double bonus = 0.0;        // coefficient on ||phi||_{Lambda^{-1}}
  double extra_bonus = 0.0;  // state-independent term (unknown noise)
  std::vector<Eigen::VectorXd> omega;      // per h
  std::vector<Eigen::MatrixXd> lambda_inv; // per h, snapshot used for the bonus
  std::vector<double> q;                   // Q-hat per cell
  std::vector<double> revenue;             // R-hat per cell
  std::vector<int> greedy;                 // per (h, x)
  std::vector<double> reserves;            // per (cell, bidder)
  std::vector<Eigen::VectorXd> theta_hat;  // per (i, h), index i * H + h

  int greedy_item(int h, int x) const { return greedy.at(static_cast<std::size_t>(h) * shape.S + x); }
  double reserve(int h, int x, int item, int i) const {
    return reserves.at(shape.reserve_slot(h, x, item, i));
  }
  double q_value(int h, int x, int item) const { return q.at(shape.cell(h, x, item)); }
};

// Uniform items, zero reserves, omega = 0.
PolicyEstimate cold_start_policy(const EnvDims& dims);

nlohmann::json policy_to_json(const PolicyEstimate& p);

struct Action {
  int item = 0;
  std::vector<double> reserves;
  bool used_pi_rand = false;
  int selected = -1;  // bidder offered the item under pi_rand
};

// Uniform item, uniform bidder i with reserve ~ Unif[0, 3]; everyone else is
// priced out with the sentinel.
Action pi_rand(int N, int U, Rng& rng);

// Mixture step: pi_rand with probability `rand_prob`, greedy otherwise. The
// cold-start policy draws its item from `cold_rng`.
Action mixture_act(const PolicyEstimate& policy, int h, int x, double rand_prob, Rng& coin_rng,
                   Rng& rand_rng, Rng& cold_rng);

// Visit counts n_h(x, item, x') from the transcript. Weights are real so
// synthetic logs can carry multiplicities.
class TransitionCounts {
 public:
  TransitionCounts() = default;
  TransitionCounts(int H, int S, int U);
  void add(int h, int x, int item, int next_x, double weight = 1.0);
  double count(int h, int x, int item, int next_x) const;
  int H() const { return H_; }
  int S() const { return S_; }
  int U() const { return U_; }

 private:
  int H_ = 0, S_ = 0, U_ = 0;
  std::vector<double> n_;
};

// Cell-indexed reserves from per-bidder mean estimates.
using ReserveRule = std::function<double(double mu_hat)>;
std::vector<double> reserve_table(const std::vector<Eigen::VectorXd>& theta_hat, const Eigen::MatrixXd& phi,
                                  const TableShape& shape, const ReserveRule& rule);

// Draws one noise value from a uniform variate (the inverse cdf of the model).
using NoiseSampler = std::function<double(double u)>;

// R-hat(h, x, item): Monte Carlo revenue of simulated truthful bids
// 1 + mu_hat + z under the given reserves. Every cell reuses the same noise
// draws (common random numbers).
std::vector<double> estimate_revenue_table(const std::vector<Eigen::VectorXd>& theta_hat,
                                           const Eigen::MatrixXd& phi, const TableShape& shape,
                                           const std::vector<double>& reserves,
                                           const NoiseSampler& sampler, int mc_samples, Rng& rng);

struct LsviInputs {
  TableShape shape;
  const Eigen::MatrixXd* phi = nullptr;
  const TransitionCounts* counts = nullptr;
  const std::vector<double>* revenue = nullptr;       // per cell
  const std::vector<Eigen::MatrixXd>* lambda_inv = nullptr;  // per h
  double bonus = 0.0;
  double extra_bonus = 0.0;
  double clip = 0.0;  // 3H when zero
};

// Optimistic backward induction. Fills omega, q, greedy, bonus terms and the
// covariance snapshot of `out`; reserves, revenue and theta are left alone.
void lsvi_backward(const LsviInputs& in, PolicyEstimate& out);

// The CLUB seller. Owns its transcript; single writer.
class Seller {
 public:
  Seller(MarketInfo info, SellerConfig cfg, std::uint64_t seed);

  struct EpisodeStart {
    bool updated = false;    // a policy update happened before acting
    bool in_buffer = false;  // episode lies in an open buffer period
    bool opened = false;     // a buffer period opened at this episode
    bool forced = false;     // ... by the power-of-two rule alone
    int k_tilde = 0;
  };
  // Completes a due update, then (if no buffer is open) checks the trigger.
  EpisodeStart begin_episode(long k);

  Action act(long k, int h, int x);

  void observe(long k, int h, int x, const Action& action, std::span<const double> bids,
               const AuctionOutcome& outcome, int next_x);

  const PolicyEstimate& policy() const { return policy_; }
  const BufferSchedule& schedule() const { return schedule_; }
  const CovarianceState& covariance() const { return cov_; }
  const SellerConfig& config() const { return cfg_; }
  const MarketInfo& info() const { return info_; }
  double rand_probability() const;
  // Noise estimate of the latest unknown-noise update, if any.
  const std::optional<EmpiricalDist>& noise_estimate() const { return fhat_; }
  // Residual count behind the noise estimate.
  std::size_t residual_count() const { return fhat_ ? fhat_->size() : 0; }

  // Runs the end-of-buffer pipeline on the data logged so far.
  void update_policy();

  bool trigger_fires() const;

 private:
  void update_known();
  void update_unknown();
  void finish_update(std::vector<Eigen::VectorXd> theta_hat, std::vector<double> reserves,
                     std::vector<double> revenue, double extra_bonus);

  MarketInfo info_;
  SellerConfig cfg_;
  std::uint64_t seed_;
  TableShape shape_;
  CovarianceState cov_;
  std::vector<Eigen::MatrixXd> ref_lambda_;
  std::vector<double> ref_logdet_;
  BufferSchedule schedule_;
  PolicyEstimate policy_;
  TransitionCounts counts_;

  // Known-noise transcript: per (i, h) rows of (phi, m, q).
  struct WinLog {
    std::vector<int> pair;
    std::vector<double> m;
    std::vector<double> q;
  };
  std::vector<WinLog> wins_;

  // Unknown-noise transcript: per h the pair index and bids of each round, and
  // per (i, h) the simulated-outcome sufficient statistics.
  struct BidLog {
    std::vector<int> pair;
    std::vector<double> bids;  // N per round
  };
  std::vector<BidLog> bid_log_;
  std::vector<Eigen::MatrixXd> sim_gram_;  // per h
  std::vector<Eigen::VectorXd> sim_rhs_;   // per (i, h)
  std::optional<EmpiricalDist> fhat_;
};

}  // namespace club
