#pragma once

// Neural gain-stage engine: an 8-unit GRU with a single-neuron linear head,
// five of them trained at fixed gain settings, blended by gain at run time.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "klon/simd/kernels.hpp"

namespace klon::rnn {

inline constexpr std::size_t kUnits = simd::kUnits;
inline constexpr std::size_t kBankSize = 5;
inline constexpr std::array<double, kBankSize> kGainGrid = {0.0, 0.25, 0.5, 0.75, 1.0};

using Vec = std::array<double, kUnits>;
using Mat = std::array<Vec, kUnits>;  // row-major: m[i][j]

struct GruWeights {
  Vec Wz{}, Wr{}, Wc{};  // kernel weights (units x 1)
  Mat Uz{}, Ur{}, Uc{};  // recurrent weights (units x units)
  Vec bz{}, br{}, bc{};
};

struct DenseWeights {
  Vec W{};  // 1 x units
  double b = 0.0;
};

double sigmoid(double x);

// y = W . h + b, no activation.
double dense_forward(const DenseWeights& w, const Vec& h);

class GruModel {
 public:
  GruModel() : GruModel(GruWeights{}, DenseWeights{}) {}
  // Throws NonFiniteError on NaN/inf entries.
  GruModel(const GruWeights& gru, const DenseWeights& dense);

  const GruWeights& gru() const { return gru_; }
  const DenseWeights& dense() const { return dense_; }
  const simd::GruPacked& packed() const { return packed_; }

  const Vec& hidden() const { return h_; }
  void set_hidden(const Vec& h) { h_ = h; }
  void reset() { h_.fill(0.0); }

  // One GRU update; returns the new hidden state.
  const Vec& step(double x);
  // Step plus dense head.
  double process(double x);
  // in and out may alias.
  void process(std::span<const double> in, std::span<double> out);

 private:
  void check_state() const;

  GruWeights gru_;
  DenseWeights dense_;
  simd::GruPacked packed_;
  Vec h_{};
};

// Free-function form of GruModel::step.
const Vec& gru_step(GruModel& model, double x);

// Bracketing models and interpolation weight for a gain in [0, 1]:
// output = (1 - w) y[lo] + w y[lo + 1].
struct Blend {
  std::size_t lo = 0;
  double w = 0.0;
};
Blend blend_for_gain(double gain);

class ModelBank {
 public:
  // `models` ordered by kGainGrid.
  explicit ModelBank(const std::array<GruModel, kBankSize>& models);

  const GruModel& model(std::size_t i) const { return models_[i]; }
  GruModel& model(std::size_t i) { return models_[i]; }
  std::array<double, kBankSize> grid() const { return kGainGrid; }

  // Every model steps on x (all states stay warm); the output is the
  // crossfade of the two models bracketing `gain`.
  double process(double gain, double x);
  void process(double gain, std::span<const double> in, std::span<double> out);
  void reset();

 private:
  static constexpr std::size_t kScratch = 4096;
  std::array<GruModel, kBankSize> models_;
  std::vector<double> scratch_[kBankSize];
};

double bank_process(ModelBank& bank, double gain, double x);

// Deterministic demonstration weights (not trained). Kernel weights grow
// with the model's gain so higher settings drive the gates harder.
inline constexpr std::uint64_t kDemoSeed = 0x4b4c4f4e2017ull;
ModelBank make_demo_bank(std::uint64_t seed = kDemoSeed);

// Weight files. Schema: top-level array of five objects
//   {gain, gru: {Wz, Wr, Wc: 8x1, Uz, Ur, Uc: 8x8, bz, br, bc: 8}, dense: {W: 8 or 1x8, b}}
// Errors: BankIncompleteError (gain entries), DimensionError (shapes),
// NonFiniteError (values), WeightsError (anything else malformed).
ModelBank parse_model_bank(const std::string& json_text);
ModelBank load_model_bank(const std::string& path);
std::string model_bank_to_json(const ModelBank& bank);
void save_model_bank(const ModelBank& bank, const std::string& path);

// Keras-style fused GRU export (reset_after = true):
//   [{gain, kernel: 1x24, recurrent_kernel: 8x24, bias: 2x24, dense_kernel: 8x1, dense_bias: [b]}] x 5
// Gate order z, r, h. Input and recurrent biases of z and r are summed; a
// nonzero recurrent bias on the candidate gate cannot be represented and is
// rejected.
ModelBank parse_keras_bank(const std::string& json_text);
// Picks the schema from the first entry's keys.
ModelBank load_weights_auto(const std::string& path);

}  // namespace klon::rnn
