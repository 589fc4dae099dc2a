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

#include <vector>

#include <Eigen/Dense>

#include "club/env.hpp"
#include "club/noise.hpp"

namespace club::testing {

// Reaches into NoiseModel to build the degenerate z = 0 model, which the
// public factories refuse to construct.
struct NoiseAccess {
  static NoiseModel point_mass() {
    NoiseModel m;
    m.kind_ = NoiseKind::kPointMass;
    return m;
  }
};

inline NoiseModel zero_noise() { return NoiseAccess::point_mass(); }

inline EnvDims reference_dims() { return EnvDims{6, 2, 3, 3, 2}; }

inline EnvSpec reference_env(std::uint64_t seed = 1) {
  return build_tabular_env(reference_dims(), NoiseModel::uniform(), 0.9, seed);
}

// Deterministic one-hot MDP: item u in state x moves to (x + u + h) mod S.
inline EnvSpec deterministic_env(int S, int U, int H, int N, std::uint64_t seed = 3) {
  EnvDims dims{S * U, N, H, S, U};
  EnvSpec env = build_tabular_env(dims, NoiseModel::uniform(), 0.9, seed);
  for (int h = 0; h < H; ++h) {
    env.M[h].setZero();
    for (int x = 0; x < S; ++x)
      for (int u = 0; u < U; ++u) env.M[h](x * U + u, (x + u + h) % S) = 1.0;
  }
  return env;
}

}  // namespace club::testing
