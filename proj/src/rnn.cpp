#include "klon/rnn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>

#include "klon/error.hpp"

namespace klon::rnn {
namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFiniteError(std::string("non-finite value in ") + what);
  }
}

simd::GruPacked pack(const GruWeights& g, const DenseWeights& d) {
  simd::GruPacked p{};
  for (std::size_t i = 0; i < kUnits; ++i) {
    p.wz[i] = g.Wz[i];
    p.wr[i] = g.Wr[i];
    p.wc[i] = g.Wc[i];
    p.bz[i] = g.bz[i];
    p.br[i] = g.br[i];
    p.bc[i] = g.bc[i];
    p.dense_w[i] = d.W[i];
    for (std::size_t j = 0; j < kUnits; ++j) {
      p.uz[j * kUnits + i] = g.Uz[i][j];
      p.ur[j * kUnits + i] = g.Ur[i][j];
      p.uc[j * kUnits + i] = g.Uc[i][j];
    }
  }
  p.dense_b = d.b;
  return p;
}

// Uniform in [-s, s) from the top 53 bits, so the stream is identical on
// every standard library.
double uniform(std::mt19937_64& rng, double s) {
  return (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * s;
}

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dense_forward(const DenseWeights& w, const Vec& h) {
  double y = w.b;
  for (std::size_t i = 0; i < kUnits; ++i) y += w.W[i] * h[i];
  return y;
}

GruModel::GruModel(const GruWeights& gru, const DenseWeights& dense) : gru_(gru), dense_(dense) {
  for (const Vec* v : {&gru.Wz, &gru.Wr, &gru.Wc, &gru.bz, &gru.br, &gru.bc, &dense.W}) check_finite(*v, "GRU vector");
  for (const Mat* m : {&gru.Uz, &gru.Ur, &gru.Uc}) {
    for (const Vec& row : *m) check_finite(row, "GRU recurrent matrix");
  }
  if (!std::isfinite(dense.b)) throw NonFiniteError("non-finite dense bias");
  packed_ = pack(gru_, dense_);
}

void GruModel::check_state() const {
#ifndef NDEBUG
  for (double v : h_) assert(std::abs(v) <= 1.0 + 1e-12 && "GRU state left [-1, 1]");
#endif
}

const Vec& GruModel::step(double x) {
  double y;
  simd::kernels().gru_run(packed_, h_.data(), &x, &y, 1);
  check_state();
  return h_;
}

double GruModel::process(double x) {
  double y;
  simd::kernels().gru_run(packed_, h_.data(), &x, &y, 1);
  check_state();
  return y;
}

void GruModel::process(std::span<const double> in, std::span<double> out) {
  if (in.size() != out.size()) throw std::invalid_argument("GruModel::process: size mismatch");
  simd::kernels().gru_run(packed_, h_.data(), in.data(), out.data(), in.size());
  check_state();
}

const Vec& gru_step(GruModel& model, double x) { return model.step(x); }

Blend blend_for_gain(double gain) {
  const double g = std::clamp(gain, 0.0, 1.0) * static_cast<double>(kBankSize - 1);
  const auto lo = std::min(static_cast<std::size_t>(g), kBankSize - 2);
  return {lo, g - static_cast<double>(lo)};
}

ModelBank::ModelBank(const std::array<GruModel, kBankSize>& models) : models_(models) {
  for (auto& s : scratch_) s.resize(kScratch);
}

double ModelBank::process(double gain, double x) {
  double y[kBankSize];
  for (std::size_t k = 0; k < kBankSize; ++k) y[k] = models_[k].process(x);
  const Blend b = blend_for_gain(gain);
  return (1.0 - b.w) * y[b.lo] + b.w * y[b.lo + 1];
}

void ModelBank::process(double gain, std::span<const double> in, std::span<double> out) {
  if (in.size() != out.size()) throw std::invalid_argument("ModelBank::process: size mismatch");
  const Blend b = blend_for_gain(gain);
  const auto& k = simd::kernels();
  for (std::size_t off = 0; off < in.size(); off += kScratch) {
    const std::size_t n = std::min(kScratch, in.size() - off);
    for (std::size_t m = 0; m < kBankSize; ++m) models_[m].process(in.subspan(off, n), std::span(scratch_[m]).first(n));
    k.crossfade(scratch_[b.lo].data(), scratch_[b.lo + 1].data(), out.data() + off, n, b.w);
  }
}

void ModelBank::reset() {
  for (auto& m : models_) m.reset();
}

double bank_process(ModelBank& bank, double gain, double x) { return bank.process(gain, x); }

ModelBank make_demo_bank(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::array<GruModel, kBankSize> models;
  for (std::size_t m = 0; m < kBankSize; ++m) {
    const double drive = 1.0 + 7.0 * kGainGrid[m];
    GruWeights g;
    DenseWeights d;
    for (Vec* v : {&g.Wz, &g.Wr, &g.Wc}) {
      for (double& x : *v) x = uniform(rng, drive);
    }
    for (Mat* mat : {&g.Uz, &g.Ur, &g.Uc}) {
      for (Vec& row : *mat) {
        for (double& x : row) x = uniform(rng, 0.35);
      }
    }
    for (Vec* v : {&g.bz, &g.br, &g.bc}) {
      for (double& x : *v) x = uniform(rng, 0.1);
    }
    for (double& x : d.W) x = uniform(rng, 0.5);
    d.b = uniform(rng, 0.05);
    models[m] = GruModel(g, d);
  }
  return ModelBank(models);
}

}  // namespace klon::rnn
