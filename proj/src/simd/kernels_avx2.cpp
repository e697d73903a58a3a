// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a CPU feature check.
#include <immintrin.h>

#include "kernels_impl.hpp"

namespace klon::simd::detail {
namespace {

// Cephes-style exp: 2^n * e^r with |r| <= ln2/2 and a (3,3) Pade form.
inline __m256d exp4(__m256d x) {
  const __m256d hi = _mm256_set1_pd(708.0);
  x = _mm256_max_pd(_mm256_min_pd(x, hi), _mm256_set1_pd(-708.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^n through the exponent field; |n| <= 1022 after the clamp.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
}

inline __m256d sigmoid4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  return _mm256_div_pd(one, _mm256_add_pd(one, exp4(_mm256_sub_pd(_mm256_setzero_pd(), x))));
}

inline __m256d tanh4(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e2 = exp4(_mm256_add_pd(x, x));
  return _mm256_sub_pd(one, _mm256_div_pd(_mm256_set1_pd(2.0), _mm256_add_pd(e2, one)));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void gru_run(const GruPacked& m, double* h, const double* x, double* y, std::size_t n) {
  __m256d h0 = _mm256_loadu_pd(h), h1 = _mm256_loadu_pd(h + 4);
  const __m256d wz0 = _mm256_load_pd(m.wz), wz1 = _mm256_load_pd(m.wz + 4);
  const __m256d wr0 = _mm256_load_pd(m.wr), wr1 = _mm256_load_pd(m.wr + 4);
  const __m256d wc0 = _mm256_load_pd(m.wc), wc1 = _mm256_load_pd(m.wc + 4);
  const __m256d bz0 = _mm256_load_pd(m.bz), bz1 = _mm256_load_pd(m.bz + 4);
  const __m256d br0 = _mm256_load_pd(m.br), br1 = _mm256_load_pd(m.br + 4);
  const __m256d bc0 = _mm256_load_pd(m.bc), bc1 = _mm256_load_pd(m.bc + 4);
  const __m256d dw0 = _mm256_load_pd(m.dense_w), dw1 = _mm256_load_pd(m.dense_w + 4);
  const __m256d one = _mm256_set1_pd(1.0);
  alignas(32) double hs[kUnits];

  for (std::size_t t = 0; t < n; ++t) {
    const __m256d xv = _mm256_set1_pd(x[t]);
    __m256d az0 = _mm256_fmadd_pd(wz0, xv, bz0), az1 = _mm256_fmadd_pd(wz1, xv, bz1);
    __m256d ar0 = _mm256_fmadd_pd(wr0, xv, br0), ar1 = _mm256_fmadd_pd(wr1, xv, br1);
    __m256d ac0 = _mm256_setzero_pd(), ac1 = _mm256_setzero_pd();
    _mm256_store_pd(hs, h0);
    _mm256_store_pd(hs + 4, h1);
    for (std::size_t j = 0; j < kUnits; ++j) {
      const __m256d hj = _mm256_broadcast_sd(hs + j);
      const std::size_t c = j * kUnits;
      az0 = _mm256_fmadd_pd(_mm256_load_pd(m.uz + c), hj, az0);
      az1 = _mm256_fmadd_pd(_mm256_load_pd(m.uz + c + 4), hj, az1);
      ar0 = _mm256_fmadd_pd(_mm256_load_pd(m.ur + c), hj, ar0);
      ar1 = _mm256_fmadd_pd(_mm256_load_pd(m.ur + c + 4), hj, ar1);
      ac0 = _mm256_fmadd_pd(_mm256_load_pd(m.uc + c), hj, ac0);
      ac1 = _mm256_fmadd_pd(_mm256_load_pd(m.uc + c + 4), hj, ac1);
    }
    const __m256d z0 = sigmoid4(az0), z1 = sigmoid4(az1);
    const __m256d r0 = sigmoid4(ar0), r1 = sigmoid4(ar1);
    const __m256d c0 = tanh4(_mm256_fmadd_pd(r0, ac0, _mm256_fmadd_pd(wc0, xv, bc0)));
    const __m256d c1 = tanh4(_mm256_fmadd_pd(r1, ac1, _mm256_fmadd_pd(wc1, xv, bc1)));
    h0 = _mm256_fmadd_pd(z0, h0, _mm256_mul_pd(_mm256_sub_pd(one, z0), c0));
    h1 = _mm256_fmadd_pd(z1, h1, _mm256_mul_pd(_mm256_sub_pd(one, z1), c1));
    y[t] = m.dense_b + hsum(_mm256_fmadd_pd(dw1, h1, _mm256_mul_pd(dw0, h0)));
  }
  _mm256_storeu_pd(h, h0);
  _mm256_storeu_pd(h + 4, h1);
}

double sum_sq(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// No FMA here: the blend must round exactly like the scalar reference so
// grid-point and midpoint outputs are bit-exact on every ISA.
void crossfade(const double* a, const double* b, double* out, std::size_t n, double w) {
  const __m256d vw = _mm256_set1_pd(w), vv = _mm256_set1_pd(1.0 - w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_mul_pd(vv, _mm256_loadu_pd(a + i)), _mm256_mul_pd(vw, _mm256_loadu_pd(b + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
}

void scale(double* x, std::size_t n, double g) {
  const __m256d vg = _mm256_set1_pd(g);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vg));
  for (; i < n; ++i) x[i] *= g;
}

}  // namespace

const KernelTable kAvx2Table = {Isa::avx2, gru_run, sum_sq, sum_sq_diff, crossfade, scale};

}  // namespace klon::simd::detail
