#include "klon/netlist.hpp"

#include <algorithm>

namespace klon::circuit {
namespace {

Part R(std::string name, std::string n1, std::string n2, double v) {
  return {PartKind::resistor, std::move(name), {std::move(n1), std::move(n2)}, v};
}
Part C(std::string name, std::string n1, std::string n2, double v) {
  return {PartKind::capacitor, std::move(name), {std::move(n1), std::move(n2)}, v};
}
Part V(std::string name, std::string plus, std::string minus) {
  return {PartKind::voltage_source, std::move(name), {std::move(plus), std::move(minus)}, 0.0};
}
Part D(std::string name, std::string n1, std::string n2) {
  return {PartKind::diode_pair, std::move(name), {std::move(n1), std::move(n2)}, 0.0};
}
Part OA(std::string name, std::string plus, std::string minus, std::string out) {
  return {PartKind::opamp, std::move(name), {std::move(plus), std::move(minus), std::move(out)}, 0.0};
}

double ff2_source_resistance(const ComponentConfig& cfg, double gain) {
  return cfg.get("R_ff2") + split_pot(cfg.get("RV1"), gain).upper;
}

}  // namespace

PotSplit split_pot(double total, double position) {
  position = std::clamp(position, 0.0, 1.0);
  return {std::max((1.0 - position) * total, 1.0), std::max(position * total, 1.0)};
}

Netlist ff1_netlist(const ComponentConfig& cfg) {
  Netlist n;
  n.parts = {V("vin", "in", "0"),
             C("C3", "in", "a", cfg.get("C3")),
             R("R7", "a", "x", cfg.get("R7")),
             C("C16", "x", "0", cfg.get("C16")),
             R("R19", "x", "0", cfg.get("R19"))};
  return n;
}

Netlist ff1_preamp_netlist(const ComponentConfig& cfg) {
  Netlist n = ff1_netlist(cfg);
  n.parts.push_back(R("R6", "a", "0", cfg.get("R6")));
  return n;
}

Netlist ff2_netlist(const ComponentConfig& cfg, double gain) {
  Netlist n;
  n.parts = {V("vin", "in", "0"),
             R("R_ff2_src", "in", "b", ff2_source_resistance(cfg, gain)),
             C("C_ff2_shunt", "b", "0", cfg.get("C_ff2_shunt")),
             R("R_ff2_out", "b", "b2", cfg.get("R_ff2_out")),
             C("C_ff2_out", "b2", "0", cfg.get("C_ff2_out"))};
  return n;
}

Netlist clipper_netlist(const ComponentConfig& cfg) {
  Netlist n;
  n.parts = {V("vin", "in", "0"),
             R("R_clip_in", "in", "c1", cfg.get("R_clip_in")),
             C("C_clip", "c1", "d", cfg.get("C_clip")),
             D("D", "d", "0"),
             R("R_clip_out", "d", "0", cfg.get("R_clip_out"))};
  n.diode = wdf::DiodeParams::from_config(cfg);
  return n;
}

Netlist gain_stage_netlist(const ComponentConfig& cfg, double gain) {
  Netlist n;
  const double rf = cfg.get("R_amp_f") + split_pot(cfg.get("RV1"), gain).lower;
  n.parts = {
      V("vin", "in", "0"),
      // FF-1 / pre-amp
      C("C3", "in", "a", cfg.get("C3")),
      R("R6", "a", "0", cfg.get("R6")),
      R("R7", "a", "x", cfg.get("R7")),
      C("C16", "x", "0", cfg.get("C16")),
      R("R19", "x", "sum", cfg.get("R19")),
      OA("U_pre", "a", "pre", "pre"),
      // amplifier stage
      OA("U_amp", "pre", "m", "amp"),
      R("R_amp_g", "m", "0", cfg.get("R_amp_g")),
      R("R_amp_f", "m", "amp", rf),
      C("C_amp_f", "m", "amp", cfg.get("C_amp_f")),
      // FF-2
      R("R_ff2_src", "amp", "b", ff2_source_resistance(cfg, gain)),
      C("C_ff2_shunt", "b", "0", cfg.get("C_ff2_shunt")),
      R("R_ff2_out", "b", "b2", cfg.get("R_ff2_out")),
      C("C_ff2_out", "b2", "sum", cfg.get("C_ff2_out")),
      // clipper
      R("R_clip_in", "amp", "c1", cfg.get("R_clip_in")),
      C("C_clip", "c1", "d", cfg.get("C_clip")),
      D("D", "d", "0"),
      R("R_clip_out", "d", "sum", cfg.get("R_clip_out")),
      // summing amplifier
      OA("U_sum", "0", "sum", "out"),
      R("R_sum_f", "sum", "out", cfg.get("R_sum_f")),
      C("C_sum_f", "sum", "out", cfg.get("C_sum_f")),
  };
  n.diode = wdf::DiodeParams::from_config(cfg);
  return n;
}

}  // namespace klon::circuit
