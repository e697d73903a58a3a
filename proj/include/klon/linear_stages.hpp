#pragma once

#include <complex>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "klon/component_config.hpp"

namespace klon::linear {

// H(s) = (b1 s + b0) / (a1 s + a0)
struct AnalogFirstOrder {
  double b1 = 0.0;
  double b0 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;

  // Throws DegeneratePrototypeError when the invariants do not hold.
  void validate() const;
  bool stable() const;
};

// H(z) = (b0 + b1 z^-1) / (1 + a1 z^-1) at sample rate fs.
struct FirstOrderCoeffs {
  double b0 = 1.0;
  double b1 = 0.0;
  double a1 = 0.0;
  double fs = 44100.0;

  static FirstOrderCoeffs identity(double fs) { return {1.0, 0.0, 0.0, fs}; }
};

struct FilterState {
  double x1 = 0.0;
  double y1 = 0.0;
};

struct ToneComponents {
  double R21 = 1.8e3;
  double R22 = 4.7e3;
  double R23 = 100e3;
  double R24 = 560.0;
  double RV2 = 10e3;
  double C14 = 3.9e-9;

  static ToneComponents from_config(const ComponentConfig& cfg);
};

enum class StageId { input_buffer, tone, output_buffer, amp_stage, summing_amp };

std::string_view to_string(StageId id);
StageId parse_stage_id(std::string_view name);  // throws ConfigError on unknown names

// Component map for one stage. `control` is the treble position for the tone
// stage and ignored elsewhere (the amp stage's gain is folded into Rf by
// make_stage_config).
struct StageConfig {
  StageId id = StageId::input_buffer;
  std::map<std::string, double> components;
  double control = 0.0;
};

// Pulls the stage's components out of the pedal-wide config. For amp_stage,
// `control` is the gain position and Rf = R_amp_f + max(gain * RV1, 1 ohm).
StageConfig make_stage_config(const ComponentConfig& cfg, StageId id, double control = 0.5);

// s <- 2 fs (1 - z^-1) / (1 + z^-1). A proportional prototype (a1 = b1 = 0)
// maps to a pure gain with the common (1 + z^-1) factor cancelled.
FirstOrderCoeffs bilinear_transform(const AnalogFirstOrder& proto, double fs);

// Tone-control transfer function with the wiper split
// RV2a = (1 - treble) RV2 above the wiper, RV2b = treble RV2 below it.
AnalogFirstOrder tone_analog_prototype(const ToneComponents& c, double treble);

AnalogFirstOrder stage_prototype(const StageConfig& cfg);
FirstOrderCoeffs stage_coeffs(const StageConfig& cfg, double fs);

std::complex<double> analog_response(const AnalogFirstOrder& proto, double hz);
std::complex<double> digital_response(const FirstOrderCoeffs& c, double hz);

// Frequency the bilinear transform maps `hz` to on the analog axis.
double prewarp(double hz, double fs);

// y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1]. `in` and `out` may alias.
void process_first_order(const FirstOrderCoeffs& c, FilterState& state,
                         std::span<const double> in, std::span<double> out);

class FirstOrderFilter {
 public:
  FirstOrderFilter() = default;
  explicit FirstOrderFilter(const FirstOrderCoeffs& c) : coeffs_(c) {}

  void set_coeffs(const FirstOrderCoeffs& c) { coeffs_ = c; }
  const FirstOrderCoeffs& coeffs() const { return coeffs_; }
  const FilterState& state() const { return state_; }
  void reset() { state_ = {}; }

  double process(double x) {
    const double y = coeffs_.b0 * x + coeffs_.b1 * state_.x1 - coeffs_.a1 * state_.y1;
    state_.x1 = x;
    state_.y1 = y;
    return y;
  }
  void process(std::span<double> block) { process_first_order(coeffs_, state_, block, block); }

 private:
  FirstOrderCoeffs coeffs_;
  FilterState state_;
};

}  // namespace klon::linear
