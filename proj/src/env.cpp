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

#include "club/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace club {
namespace {

Eigen::VectorXd draw_simplex(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = -std::log(1.0 - rng.uniform());
  return v / v.sum();
}

void check_index(int value, int bound, const char* what) {
  if (value < 0 || value >= bound) {
    throw std::out_of_range(std::string(what) + " index " + std::to_string(value) +
                            " out of range [0," + std::to_string(bound) + ")");
  }
}

}  // namespace

void validate_dims(const EnvDims& dims) {
  if (dims.d < 1 || dims.N < 1 || dims.H < 1 || dims.S < 1 || dims.U < 1) {
    throw std::invalid_argument("all environment dimensions must be >= 1");
  }
  if (dims.d > dims.S * dims.U) {
    throw std::invalid_argument("feature dimension d exceeds S*U");
  }
}

Eigen::VectorXd EnvSpec::feature(int x, int item) const {
  check_index(x, dims.S, "state");
  check_index(item, dims.U, "item");
  return phi.row(pair_index(x, item)).transpose();
}

double EnvSpec::mean_reward(int i, int h, int x, int item) const {
  check_index(i, dims.N, "bidder");
  check_index(h, dims.H, "step");
  check_index(x, dims.S, "state");
  check_index(item, dims.U, "item");
  return phi.row(pair_index(x, item)).dot(theta_of(i, h));
}

Eigen::VectorXd EnvSpec::transition_probs(int h, int x, int item) const {
  check_index(h, dims.H, "step");
  check_index(x, dims.S, "state");
  check_index(item, dims.U, "item");
  return M[h].transpose() * phi.row(pair_index(x, item)).transpose();
}

EnvSpec build_tabular_env(const EnvDims& dims, const NoiseModel& noise, double gamma,
                          std::uint64_t seed) {
  validate_dims(dims);
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");

  EnvSpec env;
  env.dims = dims;
  env.noise = noise;
  env.gamma = gamma;
  env.seed = seed;
  Rng rng(seed, "env_build");

  const int pairs = dims.S * dims.U;
  env.phi = Eigen::MatrixXd::Zero(pairs, dims.d);
  if (dims.d == pairs) {
    env.phi.setIdentity();
  } else {
    for (int r = 0; r < pairs; ++r) env.phi.row(r) = draw_simplex(dims.d, rng).transpose();
  }

  env.M.resize(dims.H);
  for (int h = 0; h < dims.H; ++h) {
    env.M[h].resize(dims.d, dims.S);
    for (int r = 0; r < dims.d; ++r) env.M[h].row(r) = draw_simplex(dims.S, rng).transpose();
  }

  env.theta.resize(static_cast<std::size_t>(dims.N) * dims.H);
  for (auto& th : env.theta) {
    th.resize(dims.d);
    for (int k = 0; k < dims.d; ++k) th[k] = rng.uniform();
  }
  return env;
}

std::vector<double> sample_valuations(const EnvSpec& env, int h, int x, int item, Rng& rng) {
  std::vector<double> v(env.dims.N);
  for (int i = 0; i < env.dims.N; ++i) {
    v[i] = 1.0 + env.mean_reward(i, h, x, item) + env.noise.sample(rng);
  }
  return v;
}

int sample_transition(const EnvSpec& env, int h, int x, int item, Rng& rng) {
  const Eigen::VectorXd p = env.transition_probs(h, x, item);
  const double u = rng.uniform();
  double acc = 0.0;
  for (int s = 0; s < env.dims.S; ++s) {
    acc += p[s];
    if (u < acc) return s;
  }
  // Rounding can leave acc slightly below 1; fall back to the last state with mass.
  for (int s = env.dims.S - 1; s >= 0; --s) {
    if (p[s] > 0.0) return s;
  }
  return env.dims.S - 1;
}

nlohmann::json env_to_json(const EnvSpec& env) {
  nlohmann::json j;
  j["dims"] = {{"d", env.dims.d}, {"N", env.dims.N}, {"H", env.dims.H},
               {"S", env.dims.S}, {"U", env.dims.U}};
  std::vector<double> phi;
  for (int r = 0; r < env.phi.rows(); ++r)
    for (int c = 0; c < env.phi.cols(); ++c) phi.push_back(env.phi(r, c));
  j["phi"] = phi;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : env.M) {
    std::vector<double> flat;
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    ms.push_back(flat);
  }
  j["M"] = ms;
  nlohmann::json th = nlohmann::json::array();
  for (const auto& t : env.theta) th.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  j["theta"] = th;
  j["noise"] = env.noise.to_json();
  j["gamma"] = env.gamma;
  j["seed"] = env.seed;
  j["initial_state"] = env.initial_state;
  return j;
}

EnvSpec env_from_json(const nlohmann::json& j) {
  EnvSpec env;
  const auto& d = j.at("dims");
  env.dims = {d.at("d").get<int>(), d.at("N").get<int>(), d.at("H").get<int>(),
              d.at("S").get<int>(), d.at("U").get<int>()};
  validate_dims(env.dims);
  const int pairs = env.dims.S * env.dims.U;
  const auto phi = j.at("phi").get<std::vector<double>>();
  if (static_cast<int>(phi.size()) != pairs * env.dims.d) throw std::invalid_argument("phi size");
  env.phi.resize(pairs, env.dims.d);
  for (int r = 0; r < pairs; ++r)
    for (int c = 0; c < env.dims.d; ++c) env.phi(r, c) = phi[r * env.dims.d + c];
  for (const auto& m : j.at("M")) {
    const auto flat = m.get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != env.dims.d * env.dims.S) throw std::invalid_argument("M size");
    Eigen::MatrixXd mat(env.dims.d, env.dims.S);
    for (int r = 0; r < env.dims.d; ++r)
      for (int c = 0; c < env.dims.S; ++c) mat(r, c) = flat[r * env.dims.S + c];
    env.M.push_back(mat);
  }
  for (const auto& t : j.at("theta")) {
    const auto v = t.get<std::vector<double>>();
    env.theta.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size())));
  }
  if (static_cast<int>(env.M.size()) != env.dims.H ||
      static_cast<int>(env.theta.size()) != env.dims.N * env.dims.H) {
    throw std::invalid_argument("M/theta counts do not match dims");
  }
  env.noise = NoiseModel::from_json(j.at("noise"));
  env.gamma = j.at("gamma").get<double>();
  env.seed = j.at("seed").get<std::uint64_t>();
  env.initial_state = j.value("initial_state", 0);
  return env;
}

}  // namespace club
