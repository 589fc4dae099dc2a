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

#include <algorithm>

#include "club/kernels.hpp"

namespace club::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void gemv_scalar(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::fill(y, y + rows, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    const double* col = A + c * rows;
    const double xc = x[c];
    for (std::size_t r = 0; r < rows; ++r) y[r] += col[r] * xc;
  }
}

void gemv_t_scalar(const double* A, std::size_t rows, std::size_t cols, const double* w,
                   double* out) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = dot_scalar(A + c * rows, w, rows);
}

double uniform_link_scalar(const double* u, const double* q, std::size_t n, double* w) {
  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double F = std::clamp(0.5 * (u[k] + 1.0), 0.0, 1.0);
    const double f = (u[k] > -1.0 && u[k] < 1.0) ? 0.5 : 0.0;
    const double r = q[k] - 1.0 + F;
    w[k] = r * f;
    loss += r * r;
  }
  return loss;
}

double link_scalar(const double* F, const double* f, const double* q, std::size_t n, double* w) {
  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = q[k] - 1.0 + F[k];
    w[k] = r * f[k];
    loss += r * r;
  }
  return loss;
}

RevenueSums second_price_scalar(const double* bids, std::size_t bidders, std::size_t n,
                                const double* reserves) {
  RevenueSums out;
  for (std::size_t s = 0; s < n; ++s) {
    double top = bids[s];
    double second = 0.0;
    double top_reserve = reserves[0];
    for (std::size_t i = 1; i < bidders; ++i) {
      const double b = bids[i * n + s];
      if (b > top) {
        second = top;
        top = b;
        top_reserve = reserves[i];
      } else if (b > second) {
        second = b;
      }
    }
    const double rev = top >= top_reserve ? std::max(top_reserve, second) : 0.0;
    out.sum += rev;
    out.sum_sq += rev * rev;
  }
  return out;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",           dot_scalar,         gemv_scalar,
                                 gemv_t_scalar,      uniform_link_scalar, link_scalar,
                                 second_price_scalar};
  return table;
}

}  // namespace club::kernels
