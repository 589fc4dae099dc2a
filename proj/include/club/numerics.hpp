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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "club/noise.hpp"

namespace club {

// Per-step regularized design matrices Lambda_h = lambda I + sum phi phi^T with
// the inverse kept current by rank-one (Sherman-Morrison) updates.
class CovarianceState {
 public:
  CovarianceState(int steps, int dim, double lambda = 1.0);

  void update(int h, const Eigen::VectorXd& phi);

  const Eigen::MatrixXd& lambda(int h) const { return lambda_.at(h); }
  const Eigen::MatrixXd& inverse(int h) const { return inverse_.at(h); }
  double logdet(int h) const { return logdet_.at(h); }
  long count(int h) const { return count_.at(h); }
  int steps() const { return static_cast<int>(lambda_.size()); }
  int dim() const { return dim_; }
  double regularizer() const { return reg_; }

 private:
  int dim_;
  double reg_;
  std::vector<Eigen::MatrixXd> lambda_;
  std::vector<Eigen::MatrixXd> inverse_;
  std::vector<double> logdet_;
  std::vector<long> count_;
};

// sqrt(phi^T inv phi).
double weighted_norm(const Eigen::VectorXd& phi, const Eigen::MatrixXd& inv);

// True iff old^{-1} >= 2 new^{-1} in the Loewner order, i.e. new - 2 old is
// positive semidefinite (min eigenvalue >= -1e-10). Throws on asymmetric input.
bool psd_double_dominance(const Eigen::MatrixXd& lam_new, const Eigen::MatrixXd& lam_old);

// True iff log det grew by at least log 2.
bool logdet_doubled(double logdet_new, double logdet_old);

// Rounds (phi_t, m_t, q_t) of one bidder at one step. Features are stored
// column-major (rows = rounds) so the kernels stream over rounds.
struct WinData {
  Eigen::MatrixXd phi;  // n x d
  Eigen::VectorXd m;    // payment thresholds
  Eigen::VectorXd q;    // win indicators in {0, 1}
  long size() const { return phi.rows(); }
};

struct KnownFitOptions {
  int random_starts = 6;  // on top of the zero and linearized-ridge starts
  int max_iters = 500;
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> extra_start;
  double rel_tol = 1e-12;
};

struct FitResult {
  Eigen::VectorXd theta;
  double objective = 0.0;
  int iterations = 0;
};

// sum_t (q_t - 1 + F(m_t - 1 - <phi_t, theta>))^2
double known_noise_objective(const WinData& data, const NoiseModel& noise, const Eigen::VectorXd& theta);

// Multi-start projected descent on the (nonconvex) known-noise objective over
// the ball ||theta|| <= radius. Steps use the Gauss-Newton metric with Armijo
// backtracking and fall back to the plain gradient; returns the best start.
FitResult fit_theta_known_noise(const WinData& data, const NoiseModel& noise, double radius,
                                const KnownFitOptions& opts = {});

struct ConstrainedLsResult {
  Eigen::VectorXd theta;
  double multiplier = 0.0;  // Lagrange multiplier of the norm constraint
};

// argmin ||theta|| <= radius of ||y - Phi theta||^2 given the Gram matrix
// Phi^T Phi and Phi^T y. Adds 1e-8 jitter; when the unconstrained solution is
// outside the ball the multiplier is found by bisection so ||theta|| = radius.
ConstrainedLsResult constrained_least_squares(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                              double radius);

// Norm-constrained least squares of 3N q~ on 1 + <phi, theta>.
ConstrainedLsResult fit_theta_simulated(const Eigen::MatrixXd& phi, const Eigen::VectorXd& q_sim,
                                        int bidders, double radius);

// Piecewise-linear empirical cdf: 0 below the smallest sample, 1 above the
// largest, linear between consecutive order statistics (a single sample gives
// a unit step).
class EmpiricalDist {
 public:
  explicit EmpiricalDist(std::vector<double> samples);

  double cdf(double x) const;
  double quantile(double p) const;
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// Histogram density on 2M bins of width 1/M over [-1, 1]:
// f(x) = M (F((i+1)/M) - F(i/M)) for x in (i/M, (i+1)/M].
class HistogramPdf {
 public:
  HistogramPdf(const EmpiricalDist& dist, int bins_per_unit);

  double operator()(double x) const;
  int bins_per_unit() const { return m_; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  int m_;
  std::vector<double> masses_;
};

// max(4, round(e^{1/4} / (sqrt(H) ln K))).
int histogram_bin_count(long buffer_end, int H, long K);

// sqrt(log(2 / delta) / 2) / sqrt(t).
double dkw_band(double t, double delta);

}  // namespace club
