#include "klon/linear_stages.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "klon/error.hpp"

namespace klon::linear {
namespace {

double component(const StageConfig& cfg, const std::string& name) {
  const auto it = cfg.components.find(name);
  if (it == cfg.components.end()) throw MissingComponentError(name);
  if (!(it->second > 0.0) || !std::isfinite(it->second)) {
    throw ConfigError("component '" + name + "' must be positive and finite");
  }
  return it->second;
}

}  // namespace

void AnalogFirstOrder::validate() const {
  if (!std::isfinite(b1) || !std::isfinite(b0) || !std::isfinite(a1) || !std::isfinite(a0)) {
    throw DegeneratePrototypeError("analog prototype has non-finite coefficients");
  }
  if (a1 == 0.0 && a0 == 0.0) throw DegeneratePrototypeError("analog denominator is identically zero");
}

bool AnalogFirstOrder::stable() const {
  if (a1 == 0.0) return a0 != 0.0;
  return a0 != 0.0 && (a0 > 0.0) == (a1 > 0.0);
}

ToneComponents ToneComponents::from_config(const ComponentConfig& cfg) {
  return {cfg.get("R21"), cfg.get("R22"), cfg.get("R23"),
          cfg.get("R24"), cfg.get("RV2"), cfg.get("C14")};
}

std::string_view to_string(StageId id) {
  switch (id) {
    case StageId::input_buffer: return "input_buffer";
    case StageId::tone: return "tone";
    case StageId::output_buffer: return "output_buffer";
    case StageId::amp_stage: return "amp_stage";
    case StageId::summing_amp: return "summing_amp";
  }
  return "unknown";
}

StageId parse_stage_id(std::string_view name) {
  for (auto id : {StageId::input_buffer, StageId::tone, StageId::output_buffer, StageId::amp_stage,
                  StageId::summing_amp}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

StageConfig make_stage_config(const ComponentConfig& cfg, StageId id, double control) {
  StageConfig sc;
  sc.id = id;
  sc.control = control;
  auto& m = sc.components;
  switch (id) {
    case StageId::input_buffer:
      m = {{"C", cfg.get("C_in")}, {"R", cfg.get("R_in")}};
      break;
    case StageId::output_buffer:
      m = {{"C", cfg.get("C_out")}, {"R", cfg.get("R_out")}};
      break;
    case StageId::amp_stage: {
      const double lower = std::max(std::clamp(control, 0.0, 1.0) * cfg.get("RV1"), 1.0);
      m = {{"Rg", cfg.get("R_amp_g")}, {"Rf", cfg.get("R_amp_f") + lower}, {"Cf", cfg.get("C_amp_f")}};
      break;
    }
    case StageId::summing_amp:
      m = {{"Rin", cfg.get("R_sum_in")}, {"Rf", cfg.get("R_sum_f")}, {"Cf", cfg.get("C_sum_f")}};
      break;
    case StageId::tone:
      for (const char* name : {"R21", "R22", "R23", "R24", "RV2", "C14"}) m[name] = cfg.get(name);
      break;
  }
  return sc;
}

FirstOrderCoeffs bilinear_transform(const AnalogFirstOrder& proto, double fs) {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw DegeneratePrototypeError("sample rate must be positive");
  proto.validate();

  if (proto.a1 == 0.0 && proto.b1 == 0.0) return {proto.b0 / proto.a0, 0.0, 0.0, fs};

  const double k = 2.0 * fs;
  const double d0 = proto.a1 * k + proto.a0;
  if (d0 == 0.0 || !std::isfinite(d0)) {
    throw DegeneratePrototypeError("digital denominator leading coefficient is zero");
  }
  FirstOrderCoeffs c;
  c.b0 = (proto.b1 * k + proto.b0) / d0;
  c.b1 = (proto.b0 - proto.b1 * k) / d0;
  c.a1 = (proto.a0 - proto.a1 * k) / d0;
  c.fs = fs;
  if (proto.stable() && !(std::abs(c.a1) < 1.0)) {
    throw DegeneratePrototypeError("bilinear transform of a stable prototype produced |a1| >= 1");
  }
  return c;
}

AnalogFirstOrder tone_analog_prototype(const ToneComponents& c, double treble) {
  treble = std::clamp(treble, 0.0, 1.0);
  const double rv2a = (1.0 - treble) * c.RV2;
  const double rv2b = treble * c.RV2;
  const double ga = 1.0 / (c.R21 + rv2b);
  const double gb = 1.0 / (c.R23 + rv2a);

  // Numerator and a0 as in the nodal solution; a1 carries the sign that puts
  // the pole in the left half-plane (the response is inverting overall).
  AnalogFirstOrder p;
  p.b1 = c.C14 * (1.0 / c.R22 + ga);
  p.b0 = (1.0 / c.R22) * (ga + gb);
  p.a1 = -c.C14 * (gb + 1.0 / c.R24);
  p.a0 = (-1.0 / c.R24) * (ga + gb);
  return p;
}

AnalogFirstOrder stage_prototype(const StageConfig& cfg) {
  switch (cfg.id) {
    case StageId::input_buffer:
    case StageId::output_buffer: {
      // Series C into shunt R: H = sRC / (1 + sRC)
      const double rc = component(cfg, "R") * component(cfg, "C");
      return {rc, 0.0, rc, 1.0};
    }
    case StageId::amp_stage: {
      // Non-inverting: 1 + (Rf || 1/sCf) / Rg
      const double rg = component(cfg, "Rg");
      const double rf = component(cfg, "Rf");
      const double cf = component(cfg, "Cf");
      return {rg * rf * cf, rg + rf, rg * rf * cf, rg};
    }
    case StageId::summing_amp: {
      // Inverting: -(Rf || 1/sCf) / Rin
      const double rin = component(cfg, "Rin");
      const double rf = component(cfg, "Rf");
      const double cf = component(cfg, "Cf");
      return {0.0, -rf, rin * rf * cf, rin};
    }
    case StageId::tone: {
      ToneComponents t{component(cfg, "R21"), component(cfg, "R22"), component(cfg, "R23"),
                       component(cfg, "R24"), component(cfg, "RV2"), component(cfg, "C14")};
      return tone_analog_prototype(t, cfg.control);
    }
  }
  throw ConfigError("unknown stage id");
}

FirstOrderCoeffs stage_coeffs(const StageConfig& cfg, double fs) {
  return bilinear_transform(stage_prototype(cfg), fs);
}

std::complex<double> analog_response(const AnalogFirstOrder& p, double hz) {
  const std::complex<double> s{0.0, 2.0 * std::numbers::pi * hz};
  return (p.b1 * s + p.b0) / (p.a1 * s + p.a0);
}

std::complex<double> digital_response(const FirstOrderCoeffs& c, double hz) {
  const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * hz / c.fs);
  return (c.b0 + c.b1 * zinv) / (1.0 + c.a1 * zinv);
}

double prewarp(double hz, double fs) {
  return fs / std::numbers::pi * std::tan(std::numbers::pi * hz / fs);
}

void process_first_order(const FirstOrderCoeffs& c, FilterState& state, std::span<const double> in,
                         std::span<double> out) {
  double x1 = state.x1;
  double y1 = state.y1;
  const std::size_t n = std::min(in.size(), out.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double x = in[i];
    const double y = c.b0 * x + c.b1 * x1 - c.a1 * y1;
    x1 = x;
    y1 = y;
    out[i] = y;
  }
  state.x1 = x1;
  state.y1 = y1;
}

}  // namespace klon::linear
