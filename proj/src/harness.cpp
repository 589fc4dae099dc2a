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

#include "club/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "club/auction.hpp"
#include "club/unknown.hpp"

namespace club {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

long get_int(const json& v, const std::string& key, long lo) {
  if (!v.is_number_integer()) fail(key, "expected an integer");
  const long x = v.get<long>();
  if (x < lo) fail(key, "must be >= " + std::to_string(lo));
  return x;
}

double get_real(const json& v, const std::string& key, bool allow_zero) {
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0)) {
    fail(key, allow_zero ? "must be finite and >= 0" : "must be finite and > 0");
  }
  return x;
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

std::string variant_name(SellerVariant v) {
  return v == SellerVariant::kKnownNoise ? "known_f" : "unknown_f";
}

std::string trigger_name(TriggerRule t) { return t == TriggerRule::kLoewner ? "loewner" : "logdet"; }

SellerConfig ExperimentConfig::seller() const {
  SellerConfig s;
  s.variant = variant;
  s.K = K;
  s.c_b = c_b;
  s.c_r = c_r;
  s.bonus2 = bonus2;
  s.mc_samples = mc_samples;
  s.grid_step = grid_step;
  s.trigger = trigger;
  s.fit_starts = fit_starts;
  s.fit_max_iters = fit_max_iters;
  return s;
}

std::vector<BidderStrategy> ExperimentConfig::bidder_strategies() const {
  std::vector<BidderStrategy> out;
  for (int i = 0; i < dims.N; ++i) {
    if (strategies.empty()) out.emplace_back(Truthful{});
    else if (strategies.size() == 1) out.push_back(parse_strategy(strategies[0]));
    else out.push_back(parse_strategy(strategies.at(i)));
  }
  return out;
}

EnvSpec ExperimentConfig::build_env() const {
  return build_tabular_env(dims, NoiseModel::parse(noise), gamma, env_seed);
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "d") c.dims.d = static_cast<int>(get_int(v, key, 1));
    else if (key == "N") c.dims.N = static_cast<int>(get_int(v, key, 1));
    else if (key == "H") c.dims.H = static_cast<int>(get_int(v, key, 1));
    else if (key == "S") c.dims.S = static_cast<int>(get_int(v, key, 1));
    else if (key == "U") c.dims.U = static_cast<int>(get_int(v, key, 1));
    else if (key == "noise") c.noise = get_string(v, key);
    else if (key == "gamma") c.gamma = get_real(v, key, false);
    else if (key == "env_seed") c.env_seed = static_cast<std::uint64_t>(get_int(v, key, 0));
    else if (key == "K") c.K = get_int(v, key, 1);
    else if (key == "variant") {
      const auto s = get_string(v, key);
      if (s == "known_f") c.variant = SellerVariant::kKnownNoise;
      else if (s == "unknown_f") c.variant = SellerVariant::kUnknownNoise;
      else fail(key, "expected known_f or unknown_f");
    } else if (key == "c_b") c.c_b = get_real(v, key, true);
    else if (key == "c_r") c.c_r = get_real(v, key, true);
    else if (key == "bonus2") c.bonus2 = get_real(v, key, true);
    else if (key == "mc_samples") c.mc_samples = static_cast<int>(get_int(v, key, 1));
    else if (key == "oracle_mc_samples") c.oracle_mc_samples = static_cast<int>(get_int(v, key, 0));
    else if (key == "grid_step") c.grid_step = get_real(v, key, false);
    else if (key == "trigger") {
      const auto s = get_string(v, key);
      if (s == "logdet") c.trigger = TriggerRule::kLogdet;
      else if (s == "loewner") c.trigger = TriggerRule::kLoewner;
      else fail(key, "expected logdet or loewner");
    } else if (key == "fit_starts") c.fit_starts = static_cast<int>(get_int(v, key, 1));
    else if (key == "fit_max_iters") c.fit_max_iters = static_cast<int>(get_int(v, key, 1));
    else if (key == "strategies") {
      if (v.is_string()) c.strategies = {v.get<std::string>()};
      else if (v.is_array()) {
        c.strategies.clear();
        for (const auto& s : v) c.strategies.push_back(get_string(s, key));
      } else fail(key, "expected a string or an array of strings");
    } else if (key == "seeds") {
      if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of integers");
      c.seeds.clear();
      for (const auto& s : v) c.seeds.push_back(static_cast<std::uint64_t>(get_int(s, key, 0)));
    } else if (key == "k_grid") {
      if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of integers");
      c.k_grid.clear();
      for (const auto& s : v) c.k_grid.push_back(get_int(s, key, 1));
    } else if (key == "out_dir") c.out_dir = get_string(v, key);
    else if (key == "snapshots") {
      if (!v.is_boolean()) fail(key, "expected a boolean");
      c.snapshots = v.get<bool>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    validate_dims(c.dims);
    (void)NoiseModel::parse(c.noise);
    (void)c.bidder_strategies();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(c.gamma < 1.0)) fail("gamma", "must lie in (0, 1)");
  if (c.grid_step > 3.0) fail("grid_step", "must not exceed 3");
  if (!c.strategies.empty() && c.strategies.size() != 1 && static_cast<int>(c.strategies.size()) != c.dims.N) {
    fail("strategies", "expected one entry or N entries");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["d"] = c.dims.d;
  j["N"] = c.dims.N;
  j["H"] = c.dims.H;
  j["S"] = c.dims.S;
  j["U"] = c.dims.U;
  j["noise"] = c.noise;
  j["gamma"] = c.gamma;
  j["env_seed"] = c.env_seed;
  j["K"] = c.K;
  j["variant"] = variant_name(c.variant);
  j["c_b"] = c.c_b;
  j["c_r"] = c.c_r;
  j["bonus2"] = c.bonus2;
  j["mc_samples"] = c.mc_samples;
  j["oracle_mc_samples"] = c.oracle_mc_samples;
  j["grid_step"] = c.grid_step;
  j["trigger"] = trigger_name(c.trigger);
  j["fit_starts"] = c.fit_starts;
  j["fit_max_iters"] = c.fit_max_iters;
  j["strategies"] = c.strategies;
  j["seeds"] = c.seeds;
  j["k_grid"] = c.k_grid;
  j["out_dir"] = c.out_dir;
  j["snapshots"] = c.snapshots;
  return j;
}

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  const EnvSpec env = config.build_env();
  const auto& dims = env.dims;
  const int H = dims.H, N = dims.N;
  const auto strategies = config.bidder_strategies();
  Seller seller(market_info(env), config.seller(), seed);
  const bool unknown = config.variant == SellerVariant::kUnknownNoise;

  const auto oracle = cached_optimal_dp(env, RevenueMethod{config.oracle_mc_samples, config.env_seed});
  const double v_star = oracle->v(0, env.initial_state);
  PolicyEvaluator evaluator(env);
  RegretLedger ledger;
  UtilityLedger utility(N);
  std::vector<BidHistory> histories(N);
  const Rng valuation_root(seed, "valuations");
  const Rng transition_root(seed, "env_transitions");

  RunResult result;
  RunSummary& sum = result.summary;
  sum.seed = seed;
  sum.K = config.K;
  sum.variant = variant_name(config.variant);
  sum.optimal_value = v_star;

  std::vector<double> zero_shift(N, 0.0);
  for (long k = 1; k <= config.K; ++k) {
    const auto start = seller.begin_episode(k);
    if (start.opened) {
      ++sum.buffer_count;
      if (start.forced) ++sum.forced_buffers;
    }
    if (start.updated && config.snapshots) {
      result.policies.push_back(seller.policy());
      if (seller.noise_estimate()) result.noise_estimates.emplace_back(seller.policy().id, *seller.noise_estimate());
    }
    const long last_end = seller.schedule().last().end;
    if (k > 2 * last_end) {
      ++sum.k_bound_violations_all;
      if (!start.in_buffer) ++sum.k_bound_violations;
    }

    EpisodeTags tags;
    tags.in_buffer = start.in_buffer;
    unsigned rand_mask = 0;
    int x = env.initial_state;
    for (int h = 0; h < H; ++h) {
      const BidContext ctx{static_cast<int>(k), h, static_cast<int>(config.K), H, N, env.gamma};
      const Action action = seller.act(k, h, x);
      const auto idx = static_cast<std::uint64_t>(k - 1) * H + h;
      Rng vr = valuation_root.substream(idx);
      const auto values = sample_valuations(env, h, x, action.item, vr);
      const auto bids = make_bids(strategies, values, ctx, histories);
      const AuctionOutcome outcome = run_round(bids, action.reserves);
      if (round_is_lie(values, bids, action.reserves)) tags.lie = true;
      if (unknown && simulated_is_lie(values, bids, simulation_draw(seed, k, h, H, N))) tags.lie = true;
      if (action.used_pi_rand) {
        tags.used_pi_rand = true;
        rand_mask |= 1U << h;
      }
      utility.accrue(static_cast<int>(k), values, outcome, env.gamma);
      for (int i = 0; i < N; ++i) {
        histories[i].push_back(BidRecord{values[i], bids[i], outcome.m[i], outcome.q[i]});
      }
      Rng tr = transition_root.substream(idx);
      const int next = sample_transition(env, h, x, action.item, tr);
      seller.observe(k, h, x, action, bids, outcome, next);
      x = next;
    }

    std::vector<double> shifts(N, 0.0);
    const BidContext ctx0{static_cast<int>(k), 0, static_cast<int>(config.K), H, N, env.gamma};
    for (int i = 0; i < N; ++i) {
      const double s = strategy_shift(strategies[i], ctx0);
      shifts[i] = std::isnan(s) ? 0.0 : s;
    }
    const double truthful = evaluator.value(seller.policy(), rand_mask, zero_shift);
    const double realized = shifts == zero_shift ? truthful : evaluator.value(seller.policy(), rand_mask, shifts);
    ledger.record_episode(k, start.k_tilde, tags, realized, truthful, v_star);
  }

  result.rows = ledger.rows();
  sum.final_regret = ledger.cum_regret();
  sum.update_count = seller.schedule().k_tilde();
  sum.deltas = ledger.totals();
  sum.buffer_episodes = sum.deltas.episodes[static_cast<int>(DeltaBucket::kBuffer)];
  for (const auto& r : result.rows) {
    if (r.tags.used_pi_rand) ++sum.pi_rand_episodes;
    if (r.tags.lie) ++sum.lie_episodes;
  }
  sum.final_buffer_end = seller.schedule().last().end;
  if (unknown && seller.noise_estimate()) {
    sum.fhat_sup_error = sup_cdf_distance(*seller.noise_estimate(), env.noise);
    sum.fhat_samples = static_cast<double>(N) * H * static_cast<double>(sum.final_buffer_end);
  }
  for (int i = 0; i < N; ++i) sum.bidder_utility.push_back(utility.discounted(i));
  return result;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SweepResult sweep(const ExperimentConfig& config, std::vector<long> Ks, std::vector<std::uint64_t> seeds,
                  const Runner& runner, const ResultSink& sink, int jobs) {
  std::sort(Ks.begin(), Ks.end());
  Ks.erase(std::unique(Ks.begin(), Ks.end()), Ks.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  if (Ks.size() < 2) throw ConfigError("sweep needs at least two distinct K values");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");

  SweepResult out;
  out.Ks = Ks;
  for (long K : Ks)
    for (auto s : seeds) out.points.push_back(SweepPoint{K, s, {}});

  std::atomic<std::size_t> next{0};
  std::mutex sink_mu;
  std::exception_ptr error;
  auto work = [&] {
    for (std::size_t t = next++; t < out.points.size(); t = next++) {
      try {
        ExperimentConfig c = config;
        c.K = out.points[t].K;
        RunResult r = runner(c, out.points[t].seed);
        out.points[t].summary = r.summary;
        if (sink) {
          std::lock_guard<std::mutex> lock(sink_mu);
          sink(c, out.points[t].seed, r);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(sink_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(out.points.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<double> Kd;
  for (long K : Ks) {
    std::vector<double> regrets;
    for (const auto& p : out.points) {
      if (p.K == K) regrets.push_back(p.summary.final_regret);
    }
    out.median_regret.push_back(median(regrets));
    Kd.push_back(static_cast<double>(K));
  }
  const bool positive = std::all_of(out.median_regret.begin(), out.median_regret.end(), [](double r) { return r > 0.0; });
  if (positive) out.fit = slope_fit(Kd, out.median_regret);
  else out.fit = SlopeFit{std::nan(""), std::nan(""), std::nan("")};
  out.sublinearity_ratio = (out.median_regret.back() / Kd.back()) / (out.median_regret.front() / Kd.front());
  return out;
}

}  // namespace club
