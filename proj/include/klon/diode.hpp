#pragma once

#include "klon/component_config.hpp"

namespace klon::wdf {

// Shockley parameters for one diode of an antiparallel pair. Defaults are
// germanium (1N34A-like).
struct DiodeParams {
  double Is = 2.52e-9;   // saturation current, A
  double Vt = 25.85e-3;  // thermal voltage, V
  double n = 1.75;       // ideality

  static DiodeParams from_config(const ComponentConfig& cfg);
};

struct DiodeSolution {
  double b = 0.0;         // reflected wave
  double v = 0.0;         // port voltage
  double residual = 0.0;  // |v + R0 i(v) - a|
  int iterations = 0;
};

// Current through the antiparallel pair at voltage v: Is (e^{v/nVt} - e^{-v/nVt}).
double diode_pair_current(double v, const DiodeParams& p);

// Solves v + R0 i(v) = a for a port terminated by the diode pair, using
// Newton steps kept inside a shrinking bracket (bisection when a step would
// leave it). Solves for |a| and restores the sign, so the map is exactly odd.
// Throws ConvergenceError if the residual is above 1e-9 after 50 iterations.
DiodeSolution solve_diode_pair(double a, double R0, const DiodeParams& p);

inline double diode_pair_reflect(double a, double R0, const DiodeParams& p) {
  return solve_diode_pair(a, R0, p).b;
}

}  // namespace klon::wdf
