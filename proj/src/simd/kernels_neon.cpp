// AArch64 variant: four float64x2 lanes cover the 8 hidden units.
#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace klon::simd::detail {
namespace {

inline float64x2_t exp2v(float64x2_t x) {
  x = vmaxq_f64(vminq_f64(x, vdupq_n_f64(708.0)), vdupq_n_f64(-708.0));
  const float64x2_t n = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(1.4426950408889634073599)));
  float64x2_t r = vfmsq_f64(x, n, vdupq_n_f64(6.93145751953125E-1));
  r = vfmsq_f64(r, n, vdupq_n_f64(1.42860682030941723212E-6));
  const float64x2_t rr = vmulq_f64(r, r);

  float64x2_t p = vdupq_n_f64(1.26177193074810590878E-4);
  p = vfmaq_f64(vdupq_n_f64(3.02994407707441961300E-2), p, rr);
  p = vfmaq_f64(vdupq_n_f64(9.99999999999999999910E-1), p, rr);
  p = vmulq_f64(p, r);
  float64x2_t q = vdupq_n_f64(3.00198505138664455042E-6);
  q = vfmaq_f64(vdupq_n_f64(2.52448340349684104192E-3), q, rr);
  q = vfmaq_f64(vdupq_n_f64(2.27265548208155028766E-1), q, rr);
  q = vfmaq_f64(vdupq_n_f64(2.00000000000000000009E0), q, rr);
  float64x2_t e = vdivq_f64(p, vsubq_f64(q, p));
  e = vfmaq_f64(vdupq_n_f64(1.0), e, vdupq_n_f64(2.0));

  const int64x2_t bits = vshlq_n_s64(vaddq_s64(vcvtq_s64_f64(n), vdupq_n_s64(1023)), 52);
  return vmulq_f64(e, vreinterpretq_f64_s64(bits));
}

inline float64x2_t sigmoid2(float64x2_t x) {
  const float64x2_t one = vdupq_n_f64(1.0);
  return vdivq_f64(one, vaddq_f64(one, exp2v(vnegq_f64(x))));
}

inline float64x2_t tanh2(float64x2_t x) {
  const float64x2_t one = vdupq_n_f64(1.0);
  return vsubq_f64(one, vdivq_f64(vdupq_n_f64(2.0), vaddq_f64(exp2v(vaddq_f64(x, x)), one)));
}

void gru_run(const GruPacked& m, double* h, const double* x, double* y, std::size_t n) {
  constexpr int kLanes = 4;
  float64x2_t hv[kLanes];
  for (int k = 0; k < kLanes; ++k) hv[k] = vld1q_f64(h + 2 * k);
  const float64x2_t one = vdupq_n_f64(1.0);
  double hs[kUnits];

  for (std::size_t t = 0; t < n; ++t) {
    const float64x2_t xv = vdupq_n_f64(x[t]);
    float64x2_t az[kLanes], ar[kLanes], ac[kLanes];
    for (int k = 0; k < kLanes; ++k) {
      az[k] = vfmaq_f64(vld1q_f64(m.bz + 2 * k), vld1q_f64(m.wz + 2 * k), xv);
      ar[k] = vfmaq_f64(vld1q_f64(m.br + 2 * k), vld1q_f64(m.wr + 2 * k), xv);
      ac[k] = vdupq_n_f64(0.0);
      vst1q_f64(hs + 2 * k, hv[k]);
    }
    for (std::size_t j = 0; j < kUnits; ++j) {
      const float64x2_t hj = vdupq_n_f64(hs[j]);
      const std::size_t c = j * kUnits;
      for (int k = 0; k < kLanes; ++k) {
        az[k] = vfmaq_f64(az[k], vld1q_f64(m.uz + c + 2 * k), hj);
        ar[k] = vfmaq_f64(ar[k], vld1q_f64(m.ur + c + 2 * k), hj);
        ac[k] = vfmaq_f64(ac[k], vld1q_f64(m.uc + c + 2 * k), hj);
      }
    }
    float64x2_t acc = vdupq_n_f64(0.0);
    for (int k = 0; k < kLanes; ++k) {
      const float64x2_t z = sigmoid2(az[k]);
      const float64x2_t r = sigmoid2(ar[k]);
      const float64x2_t pre = vfmaq_f64(vfmaq_f64(vld1q_f64(m.bc + 2 * k), vld1q_f64(m.wc + 2 * k), xv), r, ac[k]);
      const float64x2_t c = tanh2(pre);
      hv[k] = vfmaq_f64(vmulq_f64(vsubq_f64(one, z), c), z, hv[k]);
      acc = vfmaq_f64(acc, vld1q_f64(m.dense_w + 2 * k), hv[k]);
    }
    y[t] = m.dense_b + vaddvq_f64(acc);
  }
  for (int k = 0; k < kLanes; ++k) vst1q_f64(h + 2 * k, hv[k]);
}

double sum_sq(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void crossfade(const double* a, const double* b, double* out, std::size_t n, double w) {
  const float64x2_t vw = vdupq_n_f64(w), vv = vdupq_n_f64(1.0 - w);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vaddq_f64(vmulq_f64(vv, vld1q_f64(a + i)), vmulq_f64(vw, vld1q_f64(b + i))));
  }
  for (; i < n; ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
}

void scale(double* x, std::size_t n, double g) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= g;
}

}  // namespace

const KernelTable kNeonTable = {Isa::neon, gru_run, sum_sq, sum_sq_diff, crossfade, scale};

}  // namespace klon::simd::detail
