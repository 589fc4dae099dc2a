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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "club/bidders.hpp"
#include "club/env.hpp"
#include "club/oracle.hpp"
#include "club/seller.hpp"

namespace club {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  EnvDims dims{6, 2, 3, 3, 2};
  std::string noise = "uniform";
  double gamma = 0.9;
  std::uint64_t env_seed = 1;
  long K = 1000;
  SellerVariant variant = SellerVariant::kKnownNoise;
  double c_b = 0.05;
  double c_r = 0.01;
  double bonus2 = 0.02;
  int mc_samples = 4096;
  int oracle_mc_samples = 0;  // 0: quadrature
  double grid_step = 1e-3;
  TriggerRule trigger = TriggerRule::kLogdet;
  int fit_starts = 8;
  int fit_max_iters = 500;
  std::vector<std::string> strategies;  // empty: everyone truthful
  std::vector<std::uint64_t> seeds{1};
  std::vector<long> k_grid{500, 1000, 2000, 4000};
  std::string out_dir = "out";
  bool snapshots = false;

  SellerConfig seller() const;
  std::vector<BidderStrategy> bidder_strategies() const;
  EnvSpec build_env() const;
};

// Flat JSON object; unknown keys, wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& c);

std::string variant_name(SellerVariant v);
std::string trigger_name(TriggerRule t);

struct RunSummary {
  std::uint64_t seed = 0;
  long K = 0;
  std::string variant;
  double optimal_value = 0.0;
  double final_regret = 0.0;
  int buffer_count = 0;  // buffer periods opened
  int update_count = 0;  // completed policy updates
  int forced_buffers = 0;  // opened by the power-of-two rule alone
  long buffer_episodes = 0;
  long pi_rand_episodes = 0;
  long lie_episodes = 0;
  DeltaTotals deltas;
  long final_buffer_end = 0;
  // k > 2 buffer.e(k tilde) counts, outside buffers and over all episodes.
  long k_bound_violations = 0;
  long k_bound_violations_all = 0;
  std::optional<double> fhat_sup_error;
  std::optional<double> fhat_samples;  // N * H * buffer.e at the final update
  std::vector<double> bidder_utility;  // discounted
};

struct RunResult {
  std::vector<LedgerRow> rows;
  RunSummary summary;
  std::vector<PolicyEstimate> policies;                   // when snapshots are on
  std::vector<std::pair<int, EmpiricalDist>> noise_estimates;  // (policy id, F-hat)
};

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed);

struct SweepPoint {
  long K = 0;
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // sorted by (K, seed)
  std::vector<long> Ks;
  std::vector<double> median_regret;
  SlopeFit fit;
  // (regret(K_max) / K_max) / (regret(K_min) / K_min) on the medians.
  double sublinearity_ratio = 0.0;
};

using Runner = std::function<RunResult(const ExperimentConfig&, std::uint64_t seed)>;
using ResultSink = std::function<void(const ExperimentConfig&, std::uint64_t seed, const RunResult&)>;

double median(std::vector<double> v);

// Every (K, seed) pair, `jobs` at a time. The sink is called under a lock.
SweepResult sweep(const ExperimentConfig& config, std::vector<long> Ks, std::vector<std::uint64_t> seeds,
                  const Runner& runner = run_experiment, const ResultSink& sink = {}, int jobs = 1);

}  // namespace club
