#include "klon/diode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "klon/error.hpp"

namespace klon::wdf {

DiodeParams DiodeParams::from_config(const ComponentConfig& cfg) {
  return {cfg.get("D_Is"), cfg.get("D_Vt"), cfg.get("D_n")};
}

double diode_pair_current(double v, const DiodeParams& p) {
  return 2.0 * p.Is * std::sinh(v / (p.n * p.Vt));
}

DiodeSolution solve_diode_pair(double a, double R0, const DiodeParams& p) {
  constexpr int kMaxIterations = 50;
  constexpr double kTolerance = 1e-9;

  if (!(p.Is > 0.0) || !(p.Vt > 0.0) || !(p.n > 0.0) || !(R0 > 0.0)) {
    throw WdfError("diode pair needs Is, Vt, n and R0 > 0");
  }
  if (a == 0.0) return {0.0, 0.0, 0.0, 0};

  const double sign = a < 0.0 ? -1.0 : 1.0;
  const double target = std::abs(a);
  const double nvt = p.n * p.Vt;
  const double k = 2.0 * R0 * p.Is;

  const auto f = [&](double v) { return v + k * std::sinh(v / nvt) - target; };

  // f(0) = -target < 0 and f(target) > 0, so the root lies in (0, target).
  double lo = 0.0;
  double hi = target;
  double v = std::min(target, nvt * std::asinh(target / k));
  double fv = f(v);
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    if (std::abs(fv) <= 1e-14 * std::max(1.0, target)) break;
    if (fv > 0.0 || !std::isfinite(fv)) hi = v; else lo = v;
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) break;

    const double df = 1.0 + (k / nvt) * std::cosh(v / nvt);
    double next = v - fv / df;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    v = next;
    fv = f(v);
  }

  const double residual = std::abs(fv);
  if (!(residual <= kTolerance)) throw ConvergenceError("diode pair solver did not converge", residual);

  v *= sign;
  return {2.0 * v - a, v, residual, it};
}

}  // namespace klon::wdf
