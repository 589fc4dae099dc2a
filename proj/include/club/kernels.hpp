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

// Data-parallel inner loops shared by the estimators and the Monte Carlo
// revenue evaluator. Each kernel has a scalar reference implementation and an
// AVX2/FMA variant; `kernels()` picks one at first use based on CPUID.
// Setting CLUB_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace club::kernels {

struct RevenueSums {
  double sum = 0.0;
  double sum_sq = 0.0;
};

struct KernelTable {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y = A x with A column-major (rows x cols, leading dimension = rows).
  void (*gemv_colmajor)(const double* A, std::size_t rows, std::size_t cols, const double* x,
                        double* y);

  // out = A^T w with A column-major.
  void (*gemv_t_colmajor)(const double* A, std::size_t rows, std::size_t cols, const double* w,
                          double* out);

  // Residuals of the known-noise win model under the uniform link
  // F(u) = clamp((u + 1) / 2, 0, 1): r = q - 1 + F(u), w = r * f(u).
  // Returns sum r^2.
  double (*uniform_link_residuals)(const double* u, const double* q, std::size_t n, double* w);

  // Same for an arbitrary link whose values F(u), f(u) were tabulated by the caller.
  double (*link_residuals)(const double* F, const double* f, const double* q, std::size_t n,
                           double* w);

  // Second-price revenue with personalized reserves for `n` simulated rounds.
  // `bids` holds `bidders` rows of length n (bids[i * n + s]). Highest bid wins
  // (lowest index on ties) if it clears its own reserve and pays
  // max(reserve, second-highest bid).
  RevenueSums (*second_price_revenue)(const double* bids, std::size_t bidders, std::size_t n,
                                      const double* reserves);
};

const KernelTable& scalar_kernels();
// Null when the build or CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();
const KernelTable& kernels();

}  // namespace club::kernels
