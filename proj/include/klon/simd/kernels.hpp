#pragma once

// Hot loops with one scalar reference implementation and per-ISA variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once at
// startup from CPU features; KLON_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <string_view>
#include <vector>

namespace klon::simd {

inline constexpr std::size_t kUnits = 8;

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

// One GRU layer (8 units, scalar input) plus its dense head, laid out for the
// kernels. Recurrent matrices are column-major: u[j * 8 + i] = U(i, j).
struct alignas(32) GruPacked {
  double wz[kUnits];
  double wr[kUnits];
  double wc[kUnits];
  double bz[kUnits];
  double br[kUnits];
  double bc[kUnits];
  double uz[kUnits * kUnits];
  double ur[kUnits * kUnits];
  double uc[kUnits * kUnits];
  double dense_w[kUnits];
  double dense_b;
};

struct KernelTable {
  Isa isa;
  // Runs the GRU + dense head over x[0..n), updating h in place.
  void (*gru_run)(const GruPacked& m, double* h, const double* x, double* y, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // out = (1 - w) a + w b; out may alias a or b.
  void (*crossfade)(const double* a, const double* b, double* out, std::size_t n, double w);
  void (*scale)(double* x, std::size_t n, double g);
};

const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks the features.
const KernelTable* kernels_for(Isa isa);
Isa best_isa();

// The active table. Selected on first use.
const KernelTable& kernels();
// Test hook: switches the active table. Returns false if `isa` is unavailable.
bool set_active_isa(Isa isa);
Isa active_isa();

std::vector<Isa> available_isas();

}  // namespace klon::simd
