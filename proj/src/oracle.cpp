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

#include "club/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "club/auction.hpp"
#include "club/rng.hpp"

namespace club {
namespace {

TableShape shape_of(const EnvDims& dims) { return TableShape{dims.H, dims.S, dims.U, dims.N}; }

std::vector<double> means_at(const EnvSpec& env, int h, int x, int item) {
  std::vector<double> mu(env.dims.N);
  for (int i = 0; i < env.dims.N; ++i) mu[i] = env.mean_reward(i, h, x, item);
  return mu;
}

double cell_revenue(const EnvSpec& env, const TableShape& sh, int h, int x, int item,
                    std::span<const double> reserves, const RevenueMethod& method,
                    std::span<const double> shifts) {
  const auto mu = means_at(env, h, x, item);
  if (method.mc_samples > 0) {
    for (double s : shifts) {
      if (s != 0.0) throw std::invalid_argument("Monte Carlo revenue supports truthful bids only");
    }
    Rng rng = Rng(method.seed, "oracle_mc").substream(sh.cell(h, x, item));
    return expected_revenue_mc(mu, reserves, env.noise, method.mc_samples, rng).mean;
  }
  return expected_revenue_quadrature(mu, reserves, env.noise, shifts);
}

// Next-state expectation sum_y P_h(y | x, item) V_{h+1}(y).
double continuation(const EnvSpec& env, int h, int x, int item, const std::vector<double>& value) {
  if (h + 1 >= env.dims.H) return 0.0;
  const Eigen::VectorXd p = env.transition_probs(h, x, item);
  double acc = 0.0;
  for (int y = 0; y < env.dims.S; ++y) acc += p[y] * value[static_cast<std::size_t>(h + 1) * env.dims.S + y];
  return acc;
}

}  // namespace

OracleSolution optimal_dp(const EnvSpec& env, const RevenueMethod& method) {
  const auto& dims = env.dims;
  OracleSolution sol;
  sol.shape = shape_of(dims);
  const auto& sh = sol.shape;
  sol.reward.assign(sh.cells(), 0.0);
  sol.reserves.assign(sh.cells() * sh.N, 0.0);
  sol.value.assign(static_cast<std::size_t>(dims.H + 1) * dims.S, 0.0);
  sol.best_item.assign(static_cast<std::size_t>(dims.H) * dims.S, 0);
  for (int h = 0; h < dims.H; ++h)
    for (int x = 0; x < dims.S; ++x)
      for (int u = 0; u < dims.U; ++u) {
        const auto mu = means_at(env, h, x, u);
        std::vector<double> rho(dims.N);
        for (int i = 0; i < dims.N; ++i) {
          rho[i] = optimal_reserve_exact(env.noise, mu[i]);
          sol.reserves[sh.reserve_slot(h, x, u, i)] = rho[i];
        }
        sol.reward[sh.cell(h, x, u)] = cell_revenue(env, sh, h, x, u, rho, method, {});
      }
  for (int h = dims.H - 1; h >= 0; --h)
    for (int x = 0; x < dims.S; ++x) {
      double best = -1.0;
      int arg = 0;
      for (int u = 0; u < dims.U; ++u) {
        const double q = sol.reward[sh.cell(h, x, u)] + continuation(env, h, x, u, sol.value);
        if (q > best) {
          best = q;
          arg = u;
        }
      }
      sol.value[static_cast<std::size_t>(h) * dims.S + x] = best;
      sol.best_item[static_cast<std::size_t>(h) * dims.S + x] = arg;
    }
  return sol;
}

std::uint64_t env_fingerprint(const EnvSpec& env) { return hash_label(env_to_json(env).dump()); }

std::shared_ptr<const OracleSolution> cached_optimal_dp(const EnvSpec& env, const RevenueMethod& method) {
  static std::mutex mu;
  static std::map<std::tuple<std::uint64_t, int, std::uint64_t>, std::shared_ptr<const OracleSolution>> cache;
  const auto key = std::make_tuple(env_fingerprint(env), method.mc_samples,
                                   method.mc_samples > 0 ? method.seed : 0);
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto sol = std::make_shared<const OracleSolution>(optimal_dp(env, method));
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(sol)).first->second;
}

EvalPolicy eval_policy(const PolicyEstimate& p, unsigned rand_mask) {
  const auto& sh = p.shape;
  EvalPolicy e;
  e.shape = sh;
  e.item_prob.assign(sh.cells(), 0.0);
  e.reserves = p.reserves;
  e.random_step.assign(sh.H, 0);
  for (int h = 0; h < sh.H; ++h) {
    e.random_step[h] = (rand_mask >> h) & 1U;
    for (int x = 0; x < sh.S; ++x) {
      if (p.cold) {
        for (int u = 0; u < sh.U; ++u) e.item_prob[sh.cell(h, x, u)] = 1.0 / sh.U;
      } else {
        e.item_prob[sh.cell(h, x, p.greedy_item(h, x))] = 1.0;
      }
    }
  }
  return e;
}

EvalPolicy eval_policy(const OracleSolution& s) {
  const auto& sh = s.shape;
  EvalPolicy e;
  e.shape = sh;
  e.item_prob.assign(sh.cells(), 0.0);
  e.reserves = s.reserves;
  e.random_step.assign(sh.H, 0);
  for (int h = 0; h < sh.H; ++h)
    for (int x = 0; x < sh.S; ++x) e.item_prob[sh.cell(h, x, s.best_item[static_cast<std::size_t>(h) * sh.S + x])] = 1.0;
  return e;
}

double pi_rand_revenue(const EnvSpec& env, int h, int x, int item, std::span<const double> shifts) {
  const int N = env.dims.N;
  const auto mu = means_at(env, h, x, item);
  std::vector<double> cuts;
  for (int j = 0; j < N; ++j) {
    const double c = 1.0 + mu[j] + (shifts.empty() ? 0.0 : shifts[j]);
    cuts.push_back(c - 1.0);
    cuts.push_back(c + 1.0);
    for (double b : env.noise.breakpoints()) cuts.push_back(c + b);
  }
  std::vector<double> rho(N, kNoReserve);
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    auto rev = [&](double r) {
      rho[i] = r;
      return expected_revenue_quadrature(mu, rho, env.noise, shifts);
    };
    total += integrate_piecewise(rev, 0.0, kMaxValuation, cuts, 0.1) / kMaxValuation;
    rho[i] = kNoReserve;
  }
  return total / N;
}

std::vector<double> policy_values(const EnvSpec& env, const EvalPolicy& p, const RevenueMethod& method,
                                  std::span<const double> shifts, const std::vector<double>* rand_revenue) {
  const auto& dims = env.dims;
  const TableShape sh = shape_of(dims);
  if (p.item_prob.size() != sh.cells() || p.reserves.size() != sh.cells() * sh.N ||
      static_cast<int>(p.random_step.size()) != sh.H) {
    throw std::invalid_argument("policy_values: policy shape does not match the environment");
  }
  std::vector<double> own_rand;
  const bool any_rand = std::any_of(p.random_step.begin(), p.random_step.end(), [](char c) { return c != 0; });
  if (any_rand && rand_revenue == nullptr) {
    own_rand.assign(sh.cells(), 0.0);
    for (int h = 0; h < sh.H; ++h) {
      if (!p.random_step[h]) continue;
      for (int x = 0; x < sh.S; ++x)
        for (int u = 0; u < sh.U; ++u) own_rand[sh.cell(h, x, u)] = pi_rand_revenue(env, h, x, u, shifts);
    }
    rand_revenue = &own_rand;
  }
  std::vector<double> value(static_cast<std::size_t>(dims.H + 1) * dims.S, 0.0);
  for (int h = dims.H - 1; h >= 0; --h)
    for (int x = 0; x < dims.S; ++x) {
      double v = 0.0;
      for (int u = 0; u < dims.U; ++u) {
        const std::size_t c = sh.cell(h, x, u);
        const double prob = p.random_step[h] ? 1.0 / dims.U : p.item_prob[c];
        if (prob == 0.0) continue;
        const double r =
            p.random_step[h]
                ? rand_revenue->at(c)
                : cell_revenue(env, sh, h, x, u,
                               std::span<const double>(p.reserves.data() + c * sh.N, sh.N), method, shifts);
        v += prob * (r + continuation(env, h, x, u, value));
      }
      value[static_cast<std::size_t>(h) * dims.S + x] = v;
    }
  return value;
}

double policy_value(const EnvSpec& env, const EvalPolicy& p, const RevenueMethod& method,
                    std::span<const double> shifts) {
  return policy_values(env, p, method, shifts)[env.initial_state];
}

const std::vector<double>& PolicyEvaluator::rand_revenue(std::span<const double> shifts) {
  std::vector<double> key(shifts.begin(), shifts.end());
  if (auto it = rand_tables_.find(key); it != rand_tables_.end()) return it->second;
  const TableShape sh = shape_of(env_.dims);
  std::vector<double> table(sh.cells());
  for (int h = 0; h < sh.H; ++h)
    for (int x = 0; x < sh.S; ++x)
      for (int u = 0; u < sh.U; ++u) table[sh.cell(h, x, u)] = pi_rand_revenue(env_, h, x, u, shifts);
  return rand_tables_.emplace(std::move(key), std::move(table)).first->second;
}

double PolicyEvaluator::value(const PolicyEstimate& p, unsigned rand_mask, std::span<const double> shifts) {
  auto key = std::make_tuple(p.id, rand_mask, std::vector<double>(shifts.begin(), shifts.end()));
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  const std::vector<double>* table = rand_mask != 0 ? &rand_revenue(shifts) : nullptr;
  const double v = policy_values(env_, eval_policy(p, rand_mask), {}, shifts, table)[env_.initial_state];
  values_.emplace(std::move(key), v);
  return v;
}

bool round_is_lie(std::span<const double> valuations, std::span<const double> bids,
                  std::span<const double> reserves) {
  const std::size_t n = bids.size();
  if (valuations.size() != n || reserves.size() != n) throw std::invalid_argument("round_is_lie: sizes");
  for (std::size_t i = 0; i < n; ++i) {
    if (bids[i] == valuations[i] || reserves[i] >= kNoReserve) continue;
    double m = reserves[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) m = std::max(m, bids[j]);
    }
    if ((bids[i] >= m) != (valuations[i] >= m)) return true;
  }
  return false;
}

bool simulated_is_lie(std::span<const double> valuations, std::span<const double> bids, const SimDraw& draw) {
  const auto i = static_cast<std::size_t>(draw.selected);
  if (i >= bids.size() || valuations.size() != bids.size()) throw std::invalid_argument("simulated_is_lie: sizes");
  return (bids[i] >= draw.rho) != (valuations[i] >= draw.rho);
}

std::string_view bucket_name(DeltaBucket b) {
  switch (b) {
    case DeltaBucket::kBuffer: return "buffer";
    case DeltaBucket::kPiRand: return "pi_rand";
    case DeltaBucket::kLie: return "lie";
    case DeltaBucket::kNormal: break;
  }
  return "normal";
}

DeltaBucket classify(const EpisodeTags& tags) {
  if (tags.in_buffer) return DeltaBucket::kBuffer;
  if (tags.used_pi_rand) return DeltaBucket::kPiRand;
  if (tags.lie) return DeltaBucket::kLie;
  return DeltaBucket::kNormal;
}

const LedgerRow& RegretLedger::record_episode(long k, int k_tilde, const EpisodeTags& tags, double policy_value,
                                              double truthful_value, double optimal_value) {
  LedgerRow row;
  row.episode = k;
  row.k_tilde = k_tilde;
  row.tags = tags;
  row.policy_value = policy_value;
  row.truthful_value = truthful_value;
  row.optimal_value = optimal_value;
  row.suboptimality = optimal_value - policy_value;
  row.cum_regret = cum_regret() + row.suboptimality;
  row.bucket = classify(tags);
  switch (row.bucket) {
    case DeltaBucket::kNormal:
      totals_.delta[0] += optimal_value - truthful_value;
      totals_.delta[4] += truthful_value - policy_value;
      break;
    case DeltaBucket::kBuffer: totals_.delta[1] += row.suboptimality; break;
    case DeltaBucket::kPiRand: totals_.delta[2] += row.suboptimality; break;
    case DeltaBucket::kLie: totals_.delta[3] += row.suboptimality; break;
  }
  ++totals_.episodes[static_cast<int>(row.bucket)];
  rows_.push_back(row);
  return rows_.back();
}

SlopeFit slope_fit(std::span<const double> K, std::span<const double> regret) {
  if (K.size() != regret.size()) throw std::invalid_argument("slope_fit: size mismatch");
  if (K.size() < 2) throw std::invalid_argument("slope_fit: need at least two points");
  const auto n = static_cast<double>(K.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t t = 0; t < K.size(); ++t) {
    if (!(K[t] > 0.0) || !(regret[t] > 0.0)) throw std::domain_error("slope_fit: values must be positive");
    const double x = std::log(K[t]);
    const double y = std::log(regret[t]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) throw std::invalid_argument("slope_fit: K values must differ");
  SlopeFit f;
  f.alpha = cxy / vx;
  f.intercept = (sy - f.alpha * sx) / n;
  f.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return f;
}

}  // namespace club
