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
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "club/noise.hpp"
#include "club/rng.hpp"

namespace club {

struct EnvDims {
  int d = 0;  // feature dimension
  int N = 0;  // bidders
  int H = 0;  // steps per episode
  int S = 0;  // states
  int U = 0;  // items

  bool operator==(const EnvDims&) const = default;
};

// Ground-truth linear-MDP auction world. Steps, states, items and bidders are
// 0-indexed. Immutable after construction.
//
// Features are rows of `phi` (row x * U + item) and live on the probability
// simplex, and every row of M_h is a distribution over next states, so
// P_h(.|x, item) = M_h^T phi(x, item) is always a valid distribution.
struct EnvSpec {
  EnvDims dims;
  Eigen::MatrixXd phi;                 // (S*U) x d
  std::vector<Eigen::MatrixXd> M;      // H entries, each d x S
  std::vector<Eigen::VectorXd> theta;  // N*H entries, index i*H + h
  NoiseModel noise = NoiseModel::uniform();
  double gamma = 0.9;
  std::uint64_t seed = 0;
  int initial_state = 0;

  int pair_index(int x, int item) const { return x * dims.U + item; }

  Eigen::VectorXd feature(int x, int item) const;
  double mean_reward(int i, int h, int x, int item) const;
  const Eigen::VectorXd& theta_of(int i, int h) const { return theta[i * dims.H + h]; }
  // Next-state distribution P_h(. | x, item), length S.
  Eigen::VectorXd transition_probs(int h, int x, int item) const;
};

EnvSpec build_tabular_env(const EnvDims& dims, const NoiseModel& noise, double gamma,
                          std::uint64_t seed);

// v_i = 1 + mu_ih(x, item) + z_i, z_i i.i.d. from the market noise.
std::vector<double> sample_valuations(const EnvSpec& env, int h, int x, int item, Rng& rng);
int sample_transition(const EnvSpec& env, int h, int x, int item, Rng& rng);

nlohmann::json env_to_json(const EnvSpec& env);
EnvSpec env_from_json(const nlohmann::json& j);

void validate_dims(const EnvDims& dims);

}  // namespace club
