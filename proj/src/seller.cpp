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

#include "club/seller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "club/kernels.hpp"
#include "club/unknown.hpp"

namespace club {

MarketInfo market_info(const EnvSpec& env) {
  return MarketInfo{env.dims, env.phi, env.gamma, env.noise, env.initial_state};
}

double bonus_coefficient(double c_b, double c_r, int H, long K) {
  const double lk = std::log(static_cast<double>(K) + 1.0);
  return c_b * std::pow(static_cast<double>(H), 1.5) * lk + c_r * H * lk * lk;
}

long buffer_length(long k, double gamma) {
  if (k < 1) throw std::invalid_argument("buffer_length: k must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("buffer_length: gamma outside (0, 1)");
  const double raw = 3.0 * std::log(static_cast<double>(k)) / std::log(1.0 / gamma);
  // Guard against ln ratios that land a hair above an integer.
  return static_cast<long>(std::ceil(raw - 1e-9));
}

const BufferSchedule::Period& BufferSchedule::open(long k, double gamma) {
  if (pending_) throw std::logic_error("BufferSchedule::open: a buffer period is already open");
  if (k < last().end) throw std::logic_error("BufferSchedule::open: periods must not overlap");
  pending_ = Period{k, k + buffer_length(k, gamma)};
  return *pending_;
}

void BufferSchedule::complete() {
  if (!pending_) throw std::logic_error("BufferSchedule::complete: nothing open");
  done_.push_back(*pending_);
  pending_.reset();
}

PolicyEstimate cold_start_policy(const EnvDims& dims) {
  PolicyEstimate p;
  p.cold = true;
  p.shape = TableShape{dims.H, dims.S, dims.U, dims.N};
  p.omega.assign(dims.H, Eigen::VectorXd::Zero(dims.d));
  p.lambda_inv.assign(dims.H, Eigen::MatrixXd::Identity(dims.d, dims.d));
  p.q.assign(p.shape.cells(), 0.0);
  p.revenue.assign(p.shape.cells(), 0.0);
  p.greedy.assign(static_cast<std::size_t>(dims.H) * dims.S, 0);
  p.reserves.assign(p.shape.cells() * dims.N, 0.0);
  p.theta_hat.assign(static_cast<std::size_t>(dims.N) * dims.H, Eigen::VectorXd::Zero(dims.d));
  return p;
}

nlohmann::json policy_to_json(const PolicyEstimate& p) {
  using nlohmann::json;
  const auto& sh = p.shape;
  json j;
  j["id"] = p.id;
  j["cold"] = p.cold;
  j["bonus"] = p.bonus;
  j["extra_bonus"] = p.extra_bonus;
  json omega = json::array();
  for (const auto& w : p.omega) omega.push_back(std::vector<double>(w.data(), w.data() + w.size()));
  j["omega"] = omega;
  json theta = json::array();
  for (const auto& t : p.theta_hat) theta.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  j["theta_hat"] = theta;
  json steps = json::array();
  for (int h = 0; h < sh.H; ++h) {
    json states = json::array();
    for (int x = 0; x < sh.S; ++x) {
      json items = json::array();
      for (int u = 0; u < sh.U; ++u) {
        std::vector<double> rho(sh.N);
        for (int i = 0; i < sh.N; ++i) rho[i] = p.reserve(h, x, u, i);
        items.push_back({{"q", p.q_value(h, x, u)}, {"revenue", p.revenue.at(sh.cell(h, x, u))},
                         {"reserves", rho}});
      }
      states.push_back({{"greedy_item", p.greedy_item(h, x)}, {"items", items}});
    }
    steps.push_back(states);
  }
  j["steps"] = steps;
  return j;
}

Action pi_rand(int N, int U, Rng& rng) {
  if (N < 1 || U < 1) throw std::invalid_argument("pi_rand: need at least one bidder and item");
  Action a;
  a.used_pi_rand = true;
  a.item = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(U)));
  a.selected = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(N)));
  a.reserves.assign(N, kNoReserve);
  a.reserves[a.selected] = rng.uniform(0.0, kMaxValuation);
  return a;
}

Action mixture_act(const PolicyEstimate& policy, int h, int x, double rand_prob, Rng& coin_rng,
                   Rng& rand_rng, Rng& cold_rng) {
  const auto& sh = policy.shape;
  if (coin_rng.bernoulli(rand_prob)) return pi_rand(sh.N, sh.U, rand_rng);
  Action a;
  if (policy.cold) {
    a.item = static_cast<int>(cold_rng.uniform_index(static_cast<std::size_t>(sh.U)));
    a.reserves.assign(sh.N, 0.0);
    return a;
  }
  a.item = policy.greedy_item(h, x);
  a.reserves.resize(sh.N);
  for (int i = 0; i < sh.N; ++i) a.reserves[i] = policy.reserve(h, x, a.item, i);
  return a;
}

TransitionCounts::TransitionCounts(int H, int S, int U)
    : H_(H), S_(S), U_(U), n_(static_cast<std::size_t>(H) * S * U * S, 0.0) {}

void TransitionCounts::add(int h, int x, int item, int next_x, double weight) {
  n_.at(((static_cast<std::size_t>(h) * S_ + x) * U_ + item) * S_ + next_x) += weight;
}

double TransitionCounts::count(int h, int x, int item, int next_x) const {
  return n_.at(((static_cast<std::size_t>(h) * S_ + x) * U_ + item) * S_ + next_x);
}

std::vector<double> reserve_table(const std::vector<Eigen::VectorXd>& theta_hat, const Eigen::MatrixXd& phi,
                                  const TableShape& shape, const ReserveRule& rule) {
  std::vector<double> out(shape.cells() * shape.N, 0.0);
  for (int h = 0; h < shape.H; ++h)
    for (int x = 0; x < shape.S; ++x)
      for (int u = 0; u < shape.U; ++u)
        for (int i = 0; i < shape.N; ++i) {
          const double mu = phi.row(x * shape.U + u).dot(theta_hat.at(i * shape.H + h));
          out[shape.reserve_slot(h, x, u, i)] = std::clamp(rule(std::clamp(mu, 0.0, 1.0)), 0.0, kMaxValuation);
        }
  return out;
}

std::vector<double> estimate_revenue_table(const std::vector<Eigen::VectorXd>& theta_hat,
                                           const Eigen::MatrixXd& phi, const TableShape& shape,
                                           const std::vector<double>& reserves,
                                           const NoiseSampler& sampler, int mc_samples, Rng& rng) {
  if (mc_samples < 1) throw std::invalid_argument("estimate_revenue_table: mc_samples must be >= 1");
  const auto n = static_cast<std::size_t>(mc_samples);
  const auto N = static_cast<std::size_t>(shape.N);
  std::vector<double> z(N * n);
  for (auto& v : z) v = sampler(rng.uniform());
  std::vector<double> bids(N * n);
  std::vector<double> rho(N);
  std::vector<double> out(shape.cells(), 0.0);
  const auto& k = kernels::kernels();
  for (int h = 0; h < shape.H; ++h)
    for (int x = 0; x < shape.S; ++x)
      for (int u = 0; u < shape.U; ++u) {
        for (std::size_t i = 0; i < N; ++i) {
          const double mu =
              std::clamp(phi.row(x * shape.U + u).dot(theta_hat.at(i * shape.H + h)), 0.0, 1.0);
          for (std::size_t s = 0; s < n; ++s) bids[i * n + s] = std::max(0.0, 1.0 + mu + z[i * n + s]);
          rho[i] = reserves.at(shape.reserve_slot(h, x, u, static_cast<int>(i)));
        }
        out[shape.cell(h, x, u)] = k.second_price_revenue(bids.data(), N, n, rho.data()).sum / n;
      }
  return out;
}

void lsvi_backward(const LsviInputs& in, PolicyEstimate& out) {
  const auto& sh = in.shape;
  const Eigen::MatrixXd& phi = *in.phi;
  const double clip = in.clip > 0.0 ? in.clip : 3.0 * sh.H;
  const Eigen::Index d = phi.cols();
  out.shape = sh;
  out.bonus = in.bonus;
  out.extra_bonus = in.extra_bonus;
  out.lambda_inv = *in.lambda_inv;
  out.omega.assign(sh.H, Eigen::VectorXd::Zero(d));
  out.q.assign(sh.cells(), 0.0);
  out.greedy.assign(static_cast<std::size_t>(sh.H) * sh.S, 0);

  Eigen::VectorXd v_next = Eigen::VectorXd::Zero(sh.S);
  for (int h = sh.H - 1; h >= 0; --h) {
    Eigen::VectorXd target = Eigen::VectorXd::Zero(d);
    if (h + 1 < sh.H) {
      for (int x = 0; x < sh.S; ++x)
        for (int u = 0; u < sh.U; ++u) {
          double w = 0.0;
          for (int y = 0; y < sh.S; ++y) w += in.counts->count(h, x, u, y) * v_next[y];
          if (w != 0.0) target += w * phi.row(x * sh.U + u).transpose();
        }
    }
    const Eigen::MatrixXd& inv = in.lambda_inv->at(h);
    out.omega[h] = inv * target;
    Eigen::VectorXd v_cur(sh.S);
    for (int x = 0; x < sh.S; ++x) {
      int best = 0;
      double best_q = -1.0;
      for (int u = 0; u < sh.U; ++u) {
        const Eigen::VectorXd f = phi.row(x * sh.U + u).transpose();
        const double raw = out.omega[h].dot(f) + in.revenue->at(sh.cell(h, x, u)) +
                           in.bonus * weighted_norm(f, inv) + in.extra_bonus;
        const double qv = std::clamp(raw, 0.0, clip);
        out.q[sh.cell(h, x, u)] = qv;
        if (qv > best_q) {
          best_q = qv;
          best = u;
        }
      }
      out.greedy[static_cast<std::size_t>(h) * sh.S + x] = best;
      v_cur[x] = best_q;
    }
    v_next = v_cur;
  }
}

Seller::Seller(MarketInfo info, SellerConfig cfg, std::uint64_t seed)
    : info_(std::move(info)),
      cfg_(cfg),
      seed_(seed),
      shape_{info_.dims.H, info_.dims.S, info_.dims.U, info_.dims.N},
      cov_(info_.dims.H, info_.dims.d),
      policy_(cold_start_policy(info_.dims)),
      counts_(info_.dims.H, info_.dims.S, info_.dims.U) {
  validate_dims(info_.dims);
  if (cfg_.K < 1) throw std::invalid_argument("Seller: K must be >= 1");
  for (int h = 0; h < info_.dims.H; ++h) {
    ref_lambda_.push_back(cov_.lambda(h));
    ref_logdet_.push_back(cov_.logdet(h));
  }
  const int N = info_.dims.N, H = info_.dims.H, d = info_.dims.d;
  wins_.resize(static_cast<std::size_t>(N) * H);
  bid_log_.resize(H);
  sim_gram_.assign(H, Eigen::MatrixXd::Zero(d, d));
  sim_rhs_.assign(static_cast<std::size_t>(N) * H, Eigen::VectorXd::Zero(d));
}

double Seller::rand_probability() const {
  return 1.0 / (static_cast<double>(info_.dims.H) * static_cast<double>(cfg_.K));
}

bool Seller::trigger_fires() const {
  for (int h = 0; h < info_.dims.H; ++h) {
    const bool fired = cfg_.trigger == TriggerRule::kLoewner
                           ? psd_double_dominance(cov_.lambda(h), ref_lambda_[h])
                           : logdet_doubled(cov_.logdet(h), ref_logdet_[h]);
    if (fired) return true;
  }
  return false;
}

Seller::EpisodeStart Seller::begin_episode(long k) {
  EpisodeStart st;
  auto complete_due = [&] {
    if (!schedule_.due(k)) return;
    update_policy();
    schedule_.complete();
    for (int h = 0; h < info_.dims.H; ++h) {
      ref_lambda_[h] = cov_.lambda(h);
      ref_logdet_[h] = cov_.logdet(h);
    }
    st.updated = true;
  };
  complete_due();
  if (!schedule_.active()) {
    const bool cov_trigger = trigger_fires();
    const bool open = cfg_.variant == SellerVariant::kUnknownNoise ? unknown_update_due(k, cov_trigger)
                                                                    : cov_trigger;
    if (open) {
      st.opened = true;
      st.forced = !cov_trigger;
      schedule_.open(k, info_.gamma);
      complete_due();
    }
  }
  st.in_buffer = schedule_.in_buffer(k);
  st.k_tilde = schedule_.k_tilde();
  return st;
}

Action Seller::act(long k, int h, int x) {
  const auto idx = static_cast<std::uint64_t>(k - 1) * info_.dims.H + h;
  Rng coin = Rng(seed_, "mixture_coin").substream(idx);
  Rng rand = Rng(seed_, "pi_rand").substream(idx);
  Rng cold = Rng(seed_, "cold_start").substream(idx);
  return mixture_act(policy_, h, x, rand_probability(), coin, rand, cold);
}

void Seller::observe(long k, int h, int x, const Action& action, std::span<const double> bids,
                     const AuctionOutcome& outcome, int next_x) {
  const int N = info_.dims.N, H = info_.dims.H;
  if (static_cast<int>(bids.size()) != N) throw std::invalid_argument("Seller::observe: bid count");
  const int pair = x * info_.dims.U + action.item;
  const Eigen::VectorXd f = info_.phi.row(pair).transpose();
  cov_.update(h, f);
  counts_.add(h, x, action.item, next_x);
  if (cfg_.variant == SellerVariant::kKnownNoise) {
    for (int i = 0; i < N; ++i) {
      auto& log = wins_[static_cast<std::size_t>(i) * H + h];
      log.pair.push_back(pair);
      log.m.push_back(outcome.m[i]);
      log.q.push_back(outcome.q[i]);
    }
  } else {
    auto& log = bid_log_[h];
    log.pair.push_back(pair);
    log.bids.insert(log.bids.end(), bids.begin(), bids.end());
    const SimOutcome sim = simulate_outcome(bids, simulation_draw(seed_, k, h, H, N));
    sim_gram_[h].noalias() += f * f.transpose();
    for (int i = 0; i < N; ++i) {
      sim_rhs_[static_cast<std::size_t>(i) * H + h] += (3.0 * N * sim.q[i] - 1.0) * f;
    }
  }
}

void Seller::update_policy() {
  if (cfg_.variant == SellerVariant::kKnownNoise) update_known();
  else update_unknown();
}

void Seller::update_known() {
  const int N = info_.dims.N, H = info_.dims.H, d = info_.dims.d;
  const double radius = 2.0 * std::sqrt(static_cast<double>(d));
  std::vector<Eigen::VectorXd> theta(static_cast<std::size_t>(N) * H, Eigen::VectorXd::Zero(d));
  bool any = false;
  for (int i = 0; i < N; ++i)
    for (int h = 0; h < H; ++h) {
      const std::size_t slot = static_cast<std::size_t>(i) * H + h;
      const auto& log = wins_[slot];
      const auto n = static_cast<Eigen::Index>(log.pair.size());
      if (n == 0) continue;
      any = true;
      WinData data;
      data.phi.resize(n, d);
      for (Eigen::Index t = 0; t < n; ++t) data.phi.row(t) = info_.phi.row(log.pair[t]);
      data.m = Eigen::Map<const Eigen::VectorXd>(log.m.data(), n);
      data.q = Eigen::Map<const Eigen::VectorXd>(log.q.data(), n);
      KnownFitOptions opts;
      opts.random_starts = std::max(0, cfg_.fit_starts - 2);
      opts.max_iters = cfg_.fit_max_iters;
      opts.seed = mix64(seed_ ^ mix64(static_cast<std::uint64_t>(policy_.id + 1) * 1315423911ULL + slot));
      if (!policy_.cold) opts.extra_start = policy_.theta_hat[slot];
      theta[slot] = fit_theta_known_noise(data, info_.noise, radius, opts).theta;
    }
  if (!any) {
    const int id = policy_.id + 1;
    policy_ = cold_start_policy(info_.dims);
    policy_.id = id;
    return;
  }
  const NoiseModel& noise = info_.noise;
  const double step = cfg_.grid_step;
  auto reserves = reserve_table(theta, info_.phi, shape_, [&](double mu) {
    return optimal_reserve_grid([&](double z) { return noise.cdf(z); }, mu, step);
  });
  Rng mc = Rng(seed_, "mc_revenue").substream(static_cast<std::uint64_t>(policy_.id + 1));
  auto revenue = estimate_revenue_table(theta, info_.phi, shape_, reserves,
                                        [&](double u) { return noise.quantile(u); }, cfg_.mc_samples, mc);
  finish_update(std::move(theta), std::move(reserves), std::move(revenue), 0.0);
}

void Seller::update_unknown() {
  const int N = info_.dims.N, H = info_.dims.H, d = info_.dims.d;
  const double radius = 2.0 * std::sqrt(static_cast<double>(d));
  std::size_t rounds = 0;
  for (const auto& log : bid_log_) rounds += log.pair.size();
  if (rounds == 0) {
    const int id = policy_.id + 1;
    policy_ = cold_start_policy(info_.dims);
    policy_.id = id;
    return;
  }
  std::vector<Eigen::VectorXd> theta = fit_simulated_thetas(sim_gram_, sim_rhs_, N, radius);
  std::vector<double> residuals;
  residuals.reserve(rounds * N);
  for (int h = 0; h < H; ++h) {
    const auto& log = bid_log_[h];
    for (std::size_t r = 0; r < log.pair.size(); ++r) {
      for (int i = 0; i < N; ++i) {
        const double mu = info_.phi.row(log.pair[r]).dot(theta[static_cast<std::size_t>(i) * H + h]);
        residuals.push_back(std::clamp(log.bids[r * N + i] - 1.0 - mu, -1.0, 1.0));
      }
    }
  }
  fhat_.emplace(std::move(residuals));
  const EmpiricalDist& fhat = *fhat_;
  const double step = cfg_.grid_step;
  auto reserves = reserve_table(theta, info_.phi, shape_,
                                [&](double mu) { return empirical_reserve(fhat, mu, step); });
  Rng mc = Rng(seed_, "mc_revenue").substream(static_cast<std::uint64_t>(policy_.id + 1));
  auto revenue = estimate_revenue_table(theta, info_.phi, shape_, reserves,
                                        [&](double u) { return fhat.quantile(u); }, cfg_.mc_samples, mc);
  const long buffer_end = schedule_.pending() ? schedule_.pending()->end : schedule_.last().end;
  const double extra = extra_bonus_term(cfg_.bonus2 * H * H, buffer_end);
  finish_update(std::move(theta), std::move(reserves), std::move(revenue), extra);
}

void Seller::finish_update(std::vector<Eigen::VectorXd> theta_hat, std::vector<double> reserves,
                           std::vector<double> revenue, double extra_bonus) {
  PolicyEstimate next;
  next.id = policy_.id + 1;
  next.cold = false;
  next.theta_hat = std::move(theta_hat);
  next.reserves = std::move(reserves);
  next.revenue = std::move(revenue);
  std::vector<Eigen::MatrixXd> inv;
  for (int h = 0; h < info_.dims.H; ++h) inv.push_back(cov_.inverse(h));
  LsviInputs in;
  in.shape = shape_;
  in.phi = &info_.phi;
  in.counts = &counts_;
  in.revenue = &next.revenue;
  in.lambda_inv = &inv;
  in.bonus = bonus_coefficient(cfg_.c_b, cfg_.c_r, info_.dims.H, cfg_.K);
  in.extra_bonus = extra_bonus;
  lsvi_backward(in, next);
  policy_ = std::move(next);
}

}  // namespace club
