#include <cmath>

#include "kernels_impl.hpp"

namespace klon::simd::detail {
namespace {

void gru_run(const GruPacked& m, double* h, const double* x, double* y, std::size_t n) {
  double z[kUnits], r[kUnits], uh[kUnits];
  for (std::size_t t = 0; t < n; ++t) {
    const double xt = x[t];
    for (std::size_t i = 0; i < kUnits; ++i) {
      double az = m.wz[i] * xt + m.bz[i];
      double ar = m.wr[i] * xt + m.br[i];
      double ac = 0.0;
      for (std::size_t j = 0; j < kUnits; ++j) {
        az += m.uz[j * kUnits + i] * h[j];
        ar += m.ur[j * kUnits + i] * h[j];
        ac += m.uc[j * kUnits + i] * h[j];
      }
      z[i] = 1.0 / (1.0 + std::exp(-az));
      r[i] = 1.0 / (1.0 + std::exp(-ar));
      uh[i] = ac;
    }
    double out = m.dense_b;
    for (std::size_t i = 0; i < kUnits; ++i) {
      const double c = std::tanh(m.wc[i] * xt + r[i] * uh[i] + m.bc[i]);
      h[i] = z[i] * h[i] + (1.0 - z[i]) * c;
      out += m.dense_w[i] * h[i];
    }
    y[t] = out;
  }
}

double sum_sq(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void crossfade(const double* a, const double* b, double* out, std::size_t n, double w) {
  const double v = 1.0 - w;
  for (std::size_t i = 0; i < n; ++i) out[i] = v * a[i] + w * b[i];
}

void scale(double* x, std::size_t n, double g) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= g;
}

}  // namespace

const KernelTable kScalarTable = {Isa::scalar, gru_run, sum_sq, sum_sq_diff, crossfade, scale};

}  // namespace klon::simd::detail
