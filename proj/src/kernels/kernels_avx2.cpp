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

#include "club/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <algorithm>

namespace club::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void gemv_avx2(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::fill(y, y + rows, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    const double* col = A + c * rows;
    const __m256d xc = _mm256_set1_pd(x[c]);
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
      _mm256_storeu_pd(y + r, _mm256_fmadd_pd(_mm256_loadu_pd(col + r), xc, _mm256_loadu_pd(y + r)));
    }
    for (; r < rows; ++r) y[r] += col[r] * x[c];
  }
}

void gemv_t_avx2(const double* A, std::size_t rows, std::size_t cols, const double* w,
                 double* out) {
  for (std::size_t c = 0; c < cols; ++c) out[c] = dot_avx2(A + c * rows, w, rows);
}

double uniform_link_avx2(const double* u, const double* q, std::size_t n, double* w) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d neg_one = _mm256_set1_pd(-1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d loss = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d uk = _mm256_loadu_pd(u + k);
    const __m256d F = _mm256_min_pd(_mm256_max_pd(_mm256_mul_pd(half, _mm256_add_pd(uk, one)), zero), one);
    const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(uk, neg_one, _CMP_GT_OQ),
                                         _mm256_cmp_pd(uk, one, _CMP_LT_OQ));
    const __m256d f = _mm256_and_pd(inside, half);
    const __m256d r = _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(q + k), one), F);
    _mm256_storeu_pd(w + k, _mm256_mul_pd(r, f));
    loss = _mm256_fmadd_pd(r, r, loss);
  }
  double s = hsum(loss);
  for (; k < n; ++k) {
    const double F = std::clamp(0.5 * (u[k] + 1.0), 0.0, 1.0);
    const double f = (u[k] > -1.0 && u[k] < 1.0) ? 0.5 : 0.0;
    const double r = q[k] - 1.0 + F;
    w[k] = r * f;
    s += r * r;
  }
  return s;
}

double link_avx2(const double* F, const double* f, const double* q, std::size_t n, double* w) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d loss = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d r = _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(q + k), one), _mm256_loadu_pd(F + k));
    _mm256_storeu_pd(w + k, _mm256_mul_pd(r, _mm256_loadu_pd(f + k)));
    loss = _mm256_fmadd_pd(r, r, loss);
  }
  double s = hsum(loss);
  for (; k < n; ++k) {
    const double r = q[k] - 1.0 + F[k];
    w[k] = r * f[k];
    s += r * r;
  }
  return s;
}

RevenueSums second_price_avx2(const double* bids, std::size_t bidders, std::size_t n,
                              const double* reserves) {
  __m256d acc = _mm256_setzero_pd();
  __m256d acc_sq = _mm256_setzero_pd();
  const __m256d r0 = _mm256_set1_pd(reserves[0]);
  std::size_t s = 0;
  for (; s + 4 <= n; s += 4) {
    __m256d top = _mm256_loadu_pd(bids + s);
    __m256d second = _mm256_setzero_pd();
    __m256d top_reserve = r0;
    for (std::size_t i = 1; i < bidders; ++i) {
      const __m256d b = _mm256_loadu_pd(bids + i * n + s);
      const __m256d gt_top = _mm256_cmp_pd(b, top, _CMP_GT_OQ);
      // second <- gt_top ? top : max(second, b)   (b <= top on the else branch)
      const __m256d gt_second = _mm256_cmp_pd(b, second, _CMP_GT_OQ);
      second = _mm256_blendv_pd(_mm256_blendv_pd(second, b, gt_second), top, gt_top);
      top = _mm256_blendv_pd(top, b, gt_top);
      top_reserve = _mm256_blendv_pd(top_reserve, _mm256_set1_pd(reserves[i]), gt_top);
    }
    const __m256d clears = _mm256_cmp_pd(top, top_reserve, _CMP_GE_OQ);
    const __m256d rev = _mm256_and_pd(clears, _mm256_max_pd(top_reserve, second));
    acc = _mm256_add_pd(acc, rev);
    acc_sq = _mm256_fmadd_pd(rev, rev, acc_sq);
  }
  RevenueSums out{hsum(acc), hsum(acc_sq)};
  for (; s < n; ++s) {
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

const KernelTable* avx2_kernels() {
  static const KernelTable table{"avx2",         dot_avx2,          gemv_avx2,
                                 gemv_t_avx2,    uniform_link_avx2, link_avx2,
                                 second_price_avx2};
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  return &table;
}

}  // namespace club::kernels

#else

namespace club::kernels {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace club::kernels

#endif
