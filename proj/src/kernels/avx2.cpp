// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <iterator>
#include <limits>

#include "catalyst/kernels.hpp"

namespace catalyst::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline float hmax(__m256 v) {
  __m128 m = _mm_max_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  m = _mm_max_ps(m, _mm_movehl_ps(m, m));
  m = _mm_max_ss(m, _mm_shuffle_ps(m, m, 0x1));
  return _mm_cvtss_f32(m);
}

double sum(std::span<const float> x) {
  const float* p = x.data();
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(p + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += static_cast<double>(p[i]);
  return total;
}

double sum_sq_dev(std::span<const float> x, double center) {
  const float* p = x.data();
  const std::size_t n = x.size();
  const __m256d c = _mm256_set1_pd(center);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(p + i);
    const __m256d d0 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(v)), c);
    const __m256d d1 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)), c);
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = static_cast<double>(p[i]) - center;
    total += d * d;
  }
  return total;
}

float max(std::span<const float> x) {
  const float* p = x.data();
  const std::size_t n = x.size();
  if (n < 8) return *std::max_element(p, p + n);
  __m256 m = _mm256_loadu_ps(p);
  std::size_t i = 8;
  for (; i + 8 <= n; i += 8) m = _mm256_max_ps(m, _mm256_loadu_ps(p + i));
  float best = hmax(m);
  for (; i < n; ++i) best = std::max(best, p[i]);
  return best;
}

double clipped_sum(std::span<const double> x, double cap) {
  const double* p = x.data();
  const std::size_t n = x.size();
  const __m256d c = _mm256_set1_pd(cap);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_min_pd(_mm256_loadu_pd(p + i), c));
    acc1 = _mm256_add_pd(acc1, _mm256_min_pd(_mm256_loadu_pd(p + i + 4), c));
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += std::min(p[i], cap);
  return total;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 =
        _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i + 4),
                                     _mm256_loadu_pd(b.data() + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

void axpy(double alpha, std::span<const float> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x.data() + i));
    _mm256_storeu_pd(y.data() + i,
                     _mm256_fmadd_pd(a, xv, _mm256_loadu_pd(y.data() + i)));
  }
  for (; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

double median(std::span<const float> x) {
  const std::size_t n = x.size();
  if (n > kRankCountLimit) return scalar::median_by_selection(x);
  // Padding with +inf keeps every count unchanged for the real lanes.
  alignas(32) float buf[kRankCountLimit];
  std::fill(std::begin(buf), std::end(buf), std::numeric_limits<float>::infinity());
  std::copy(x.begin(), x.end(), buf);
  const std::size_t blocks = (n + 7) / 8;

  // Counts for eight x[i] at a time: compare masks are -1, so subtracting
  // them adds one per hit.
  alignas(32) std::int32_t lt[kRankCountLimit];
  alignas(32) std::int32_t le[kRankCountLimit];
  for (std::size_t b = 0; b < blocks; ++b) {
    const __m256 xi = _mm256_load_ps(buf + 8 * b);
    __m256i lt_acc = _mm256_setzero_si256();
    __m256i le_acc = _mm256_setzero_si256();
    for (std::size_t j = 0; j < n; ++j) {
      const __m256 xj = _mm256_broadcast_ss(buf + j);
      lt_acc = _mm256_sub_epi32(lt_acc, _mm256_castps_si256(_mm256_cmp_ps(xj, xi, _CMP_LT_OQ)));
      le_acc = _mm256_sub_epi32(le_acc, _mm256_castps_si256(_mm256_cmp_ps(xj, xi, _CMP_LE_OQ)));
    }
    _mm256_store_si256(reinterpret_cast<__m256i*>(lt + 8 * b), lt_acc);
    _mm256_store_si256(reinterpret_cast<__m256i*>(le + 8 * b), le_acc);
  }

  const auto lo = static_cast<std::int32_t>((n - 1) / 2);
  const auto hi = static_cast<std::int32_t>(n / 2);
  float a = 0.0f, b = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    if (lt[i] <= lo && lo < le[i]) a = buf[i];
    if (lt[i] <= hi && hi < le[i]) b = buf[i];
  }
  return 0.5 * (static_cast<double>(a) + static_cast<double>(b));
}

// Natural log of positive, normal, finite lanes. p = 2^e·m with m folded into
// [√½, √2); log m = 2·atanh(f), f = (m-1)/(m+1), |f| <= 0.1716, so twelve
// series terms reach double rounding.
inline __m256d log_pd(__m256d p) {
  const __m256i bits = _mm256_castpd_si256(p);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  // Biased exponent to double via the 2^52 trick (no int64 -> double in AVX2).
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(bits, 52), magic)),
      _mm256_set1_pd(4503599627370496.0 + 1023.0));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d f = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d s = _mm256_mul_pd(f, f);
  __m256d poly = _mm256_set1_pd(1.0 / 23.0);
  for (int k = 10; k >= 0; --k) {
    poly = _mm256_fmadd_pd(poly, s, _mm256_set1_pd(1.0 / (2.0 * k + 1.0)));
  }
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(f, f), poly);
  // ln 2 split so e·ln2_hi is exact.
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  return _mm256_fmadd_pd(e, ln2_hi, _mm256_fmadd_pd(e, ln2_lo, log_m));
}

double entropy(std::span<const float> x, double total) {
  const float* p = x.data();
  const std::size_t n = x.size();
  const __m256d inv = _mm256_set1_pd(1.0 / total);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d q = _mm256_mul_pd(_mm256_cvtps_pd(_mm_loadu_ps(p + i)), inv);
    // Non-positive lanes become p = 1, which contributes 1·log 1 = 0.
    q = _mm256_blendv_pd(one, q, _mm256_cmp_pd(q, zero, _CMP_GT_OQ));
    acc = _mm256_fmadd_pd(q, log_pd(q), acc);
  }
  double h = -hsum(acc);
  for (; i < n; ++i) {
    if (p[i] <= 0.0f) continue;
    const double q = static_cast<double>(p[i]) / total;
    h -= q * std::log(q);
  }
  return h;
}

}  // namespace

const KernelTable kTable{Isa::kAvx2, sum,           sum_sq_dev,
                         max,        clipped_sum,   squared_distance,
                         axpy,       median,        entropy};

}  // namespace catalyst::kernels::avx2
