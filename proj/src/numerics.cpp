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

#include "club/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "club/kernels.hpp"
#include "club/rng.hpp"

namespace club {

CovarianceState::CovarianceState(int steps, int dim, double lambda) : dim_(dim), reg_(lambda) {
  if (steps <= 0 || dim <= 0 || !(lambda > 0.0)) {
    throw std::invalid_argument("CovarianceState: steps, dim and lambda must be positive");
  }
  lambda_.assign(steps, lambda * Eigen::MatrixXd::Identity(dim, dim));
  inverse_.assign(steps, Eigen::MatrixXd::Identity(dim, dim) / lambda);
  logdet_.assign(steps, dim * std::log(lambda));
  count_.assign(steps, 0);
}

void CovarianceState::update(int h, const Eigen::VectorXd& phi) {
  if (phi.size() != dim_) throw std::invalid_argument("CovarianceState::update: dimension mismatch");
  Eigen::MatrixXd& inv = inverse_.at(h);
  const Eigen::VectorXd u = inv * phi;
  const double quad = phi.dot(u);
  lambda_[h].noalias() += phi * phi.transpose();
  inv.noalias() -= (u * u.transpose()) / (1.0 + quad);
  // Keep the inverse exactly symmetric so downstream quadratic forms agree bitwise.
  inv = 0.5 * (inv + inv.transpose()).eval();
  logdet_[h] += std::log1p(quad);
  ++count_[h];
}

double weighted_norm(const Eigen::VectorXd& phi, const Eigen::MatrixXd& inv) {
  return std::sqrt(std::max(0.0, phi.dot(inv * phi)));
}

bool psd_double_dominance(const Eigen::MatrixXd& lam_new, const Eigen::MatrixXd& lam_old) {
  if (lam_new.rows() != lam_new.cols() || lam_new.rows() != lam_old.rows() ||
      lam_old.rows() != lam_old.cols()) {
    throw std::invalid_argument("psd_double_dominance: shape mismatch");
  }
  const double scale = std::max({1.0, lam_new.cwiseAbs().maxCoeff(), lam_old.cwiseAbs().maxCoeff()});
  const double sym_tol = 1e-12 * scale;
  if ((lam_new - lam_new.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    throw std::invalid_argument("psd_double_dominance: new matrix is not symmetric");
  }
  if ((lam_old - lam_old.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    throw std::invalid_argument("psd_double_dominance: old matrix is not symmetric");
  }
  const Eigen::MatrixXd diff = lam_new - 2.0 * lam_old;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-10;
}

bool logdet_doubled(double logdet_new, double logdet_old) {
  return logdet_new - logdet_old >= std::log(2.0) - 1e-12;
}

namespace {

Eigen::VectorXd project_ball(Eigen::VectorXd theta, double radius) {
  const double n = theta.norm();
  if (n > radius) theta *= radius / n;
  return theta;
}

// Reusable buffers for objective/gradient evaluations.
struct Workspace {
  Eigen::VectorXd u, w, F, f;
};

double evaluate(const WinData& data, const NoiseModel& noise, const Eigen::VectorXd& theta,
                Workspace& ws, Eigen::VectorXd* grad) {
  const auto& k = kernels::kernels();
  const auto n = static_cast<std::size_t>(data.size());
  const auto d = static_cast<std::size_t>(theta.size());
  ws.u.resize(n);
  ws.w.resize(n);
  k.gemv_colmajor(data.phi.data(), n, d, theta.data(), ws.u.data());
  ws.u = (data.m.array() - 1.0 - ws.u.array()).matrix();
  double loss;
  if (noise.kind() == NoiseKind::kUniform) {
    loss = k.uniform_link_residuals(ws.u.data(), data.q.data(), n, ws.w.data());
  } else {
    ws.F.resize(n);
    ws.f.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      ws.F[t] = noise.cdf(ws.u[t]);
      ws.f[t] = noise.pdf(ws.u[t]);
    }
    loss = k.link_residuals(ws.F.data(), ws.f.data(), data.q.data(), n, ws.w.data());
  }
  if (grad != nullptr) {
    grad->resize(d);
    k.gemv_t_colmajor(data.phi.data(), n, d, ws.w.data(), grad->data());
    *grad *= -2.0;
  }
  return loss;
}

// Squared link slopes at the current point, for the Gauss-Newton metric.
Eigen::VectorXd slope_sq(const NoiseModel& noise, const Eigen::VectorXd& u) {
  Eigen::VectorXd s(u.size());
  for (Eigen::Index t = 0; t < u.size(); ++t) {
    const double f = noise.pdf(u[t]);
    s[t] = f * f;
  }
  return s;
}

FitResult descend(const WinData& data, const NoiseModel& noise, double radius, Eigen::VectorXd theta,
                  const KnownFitOptions& opts, Workspace& ws) {
  const Eigen::Index d = theta.size();
  theta = project_ball(std::move(theta), radius);
  Eigen::VectorXd grad, grad_next;
  double loss = evaluate(data, noise, theta, ws, &grad);
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const Eigen::VectorXd s = slope_sq(noise, ws.u);
    Eigen::MatrixXd metric = 2.0 * data.phi.transpose() * s.asDiagonal() * data.phi;
    metric.diagonal().array() += 1e-6 * (metric.trace() / static_cast<double>(d)) + 1e-10;
    const Eigen::VectorXd gn_dir = -metric.llt().solve(grad);

    bool moved = false;
    Eigen::VectorXd candidate;
    double cand_loss = loss;
    const double gnorm = grad.norm();
    const Eigen::VectorXd directions[2] = {gn_dir, gnorm > 0.0 ? Eigen::VectorXd(-grad / gnorm) : gn_dir};
    for (const auto& dir : directions) {
      if (!dir.allFinite() || dir.squaredNorm() == 0.0) continue;
      double step = 1.0;
      for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
        candidate = project_ball(theta + step * dir, radius);
        Workspace probe;
        cand_loss = evaluate(data, noise, candidate, probe, nullptr);
        if (cand_loss <= loss + 1e-4 * grad.dot(candidate - theta)) {
          moved = true;
          break;
        }
      }
      if (moved) break;
    }
    if (!moved) break;
    const double delta = loss - cand_loss;
    const double move = (candidate - theta).norm();
    theta = candidate;
    loss = evaluate(data, noise, theta, ws, &grad);
    if (delta <= opts.rel_tol * (1.0 + loss) || move < 1e-12) {
      ++it;
      break;
    }
  }
  return {theta, loss, it};
}

Eigen::VectorXd linearized_start(const WinData& data, const NoiseModel& noise) {
  const Eigen::Index d = data.phi.cols();
  const double f0 = noise.pdf(0.0);
  if (!(f0 > 0.0) || data.size() == 0) return Eigen::VectorXd::Zero(d);
  const double F0 = noise.cdf(0.0);
  // Linearize F(u) ~ F(0) + f(0) u and ridge-regress the implied mean on the features.
  const Eigen::VectorXd y = ((data.m.array() - 1.0) + (data.q.array() - 1.0 + F0) / f0).matrix();
  Eigen::MatrixXd gram = data.phi.transpose() * data.phi;
  gram.diagonal().array() += 1.0;
  return gram.ldlt().solve(data.phi.transpose() * y);
}

}  // namespace

double known_noise_objective(const WinData& data, const NoiseModel& noise, const Eigen::VectorXd& theta) {
  Workspace ws;
  return evaluate(data, noise, theta, ws, nullptr);
}

FitResult fit_theta_known_noise(const WinData& data, const NoiseModel& noise, double radius,
                                const KnownFitOptions& opts) {
  const Eigen::Index d = data.phi.cols();
  if (data.m.size() != data.size() || data.q.size() != data.size()) {
    throw std::invalid_argument("fit_theta_known_noise: inconsistent data sizes");
  }
  if (data.size() == 0) throw std::invalid_argument("fit_theta_known_noise: no data");
  if (!(radius > 0.0)) throw std::invalid_argument("fit_theta_known_noise: radius must be positive");

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(d));
  starts.push_back(linearized_start(data, noise));
  if (opts.extra_start && opts.extra_start->size() == d) starts.push_back(*opts.extra_start);
  Rng rng(opts.seed, "fit_starts");
  for (int s = 0; s < opts.random_starts; ++s) {
    Eigen::VectorXd g(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      // Box-Muller for an isotropic direction.
      const double u1 = std::max(rng.uniform(), 1e-300);
      const double u2 = rng.uniform();
      g[j] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const double gn = g.norm();
    starts.push_back(gn > 0.0 ? Eigen::VectorXd(g * (r / gn)) : Eigen::VectorXd::Zero(d));
  }

  Workspace ws;
  FitResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    FitResult r = descend(data, noise, radius, s, opts, ws);
    if (r.objective < best.objective) best = std::move(r);
  }
  return best;
}

ConstrainedLsResult constrained_least_squares(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                              double radius) {
  const Eigen::Index d = gram.rows();
  if (gram.cols() != d || rhs.size() != d) throw std::invalid_argument("constrained_least_squares: shape");
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += 1e-8;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-8);
  const Eigen::VectorXd c = es.eigenvectors().transpose() * rhs;
  auto solve = [&](double lam) -> Eigen::VectorXd {
    return es.eigenvectors() * (c.array() / (ev.array() + lam)).matrix();
  };
  ConstrainedLsResult out{solve(0.0), 0.0};
  if (out.theta.norm() <= radius) return out;
  double lo = 0.0;
  double hi = c.norm() / radius;  // ||theta(hi)|| <= ||c|| / hi = radius
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (solve(mid).norm() > radius) lo = mid;
    else hi = mid;
  }
  out.multiplier = hi;
  out.theta = project_ball(solve(hi), radius);
  return out;
}

ConstrainedLsResult fit_theta_simulated(const Eigen::MatrixXd& phi, const Eigen::VectorXd& q_sim,
                                        int bidders, double radius) {
  if (phi.rows() != q_sim.size()) throw std::invalid_argument("fit_theta_simulated: size mismatch");
  if (phi.rows() == 0) throw std::invalid_argument("fit_theta_simulated: no data");
  const Eigen::VectorXd y = (3.0 * bidders * q_sim.array() - 1.0).matrix();
  return constrained_least_squares(phi.transpose() * phi, phi.transpose() * y, radius);
}

EmpiricalDist::EmpiricalDist(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw std::invalid_argument("EmpiricalDist: no samples");
  for (double x : sorted_) {
    if (!std::isfinite(x)) throw std::invalid_argument("EmpiricalDist: non-finite sample");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDist::cdf(double x) const {
  const std::size_t t = sorted_.size();
  if (x < sorted_.front()) return 0.0;
  if (x >= sorted_.back()) return 1.0;
  // Last index k with sorted_[k] <= x; ties resolve to the right.
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  const auto k = static_cast<std::size_t>(it - sorted_.begin()) - 1;
  const double lo = sorted_[k];
  const double hi = sorted_[k + 1];
  const double base = static_cast<double>(k) / static_cast<double>(t - 1);
  const double frac = hi > lo ? (x - lo) / (hi - lo) : 0.0;
  return base + frac / static_cast<double>(t - 1);
}

double EmpiricalDist::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("EmpiricalDist::quantile: p outside [0, 1]");
  const std::size_t t = sorted_.size();
  if (t == 1) return sorted_.front();
  const double pos = p * static_cast<double>(t - 1);
  const auto k = std::min(static_cast<std::size_t>(pos), t - 2);
  const double frac = pos - static_cast<double>(k);
  return sorted_[k] + frac * (sorted_[k + 1] - sorted_[k]);
}

HistogramPdf::HistogramPdf(const EmpiricalDist& dist, int bins_per_unit) : m_(bins_per_unit) {
  if (bins_per_unit <= 0) throw std::invalid_argument("HistogramPdf: bins_per_unit must be positive");
  masses_.resize(2 * static_cast<std::size_t>(m_));
  for (int i = -m_; i < m_; ++i) {
    const double a = static_cast<double>(i) / m_;
    const double b = static_cast<double>(i + 1) / m_;
    masses_[i + m_] = dist.cdf(b) - dist.cdf(a);
  }
}

double HistogramPdf::operator()(double x) const {
  if (!(x > -1.0 && x <= 1.0)) return 0.0;
  // Bin i covers (i/M, (i+1)/M].
  int i = static_cast<int>(std::ceil(x * m_)) - 1;
  i = std::clamp(i, -m_, m_ - 1);
  return m_ * masses_[i + m_];
}

int histogram_bin_count(long buffer_end, int H, long K) {
  if (K < 2 || buffer_end <= 0 || H <= 0) return 4;
  const double raw = std::pow(static_cast<double>(buffer_end), 0.25) /
                     (std::sqrt(static_cast<double>(H)) * std::log(static_cast<double>(K)));
  return std::max(4, static_cast<int>(std::lround(raw)));
}

double dkw_band(double t, double delta) {
  if (!(t > 0.0) || !(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("dkw_band: bad arguments");
  return std::sqrt(std::log(2.0 / delta) / 2.0) / std::sqrt(t);
}

}  // namespace club
