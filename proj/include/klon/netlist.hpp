#pragma once

#include <string>
#include <vector>

#include "klon/component_config.hpp"
#include "klon/diode.hpp"

namespace klon::circuit {

enum class PartKind { resistor, capacitor, voltage_source, diode_pair, opamp };

// One netlist element. Node "0" is ground; every bias rail is ground here.
//   resistor/capacitor/diode_pair: nodes {n1, n2}, branch current is n1 -> n2
//   voltage_source: nodes {plus, minus}, driven by the circuit input
//   opamp: ideal (nullor), nodes {non-inverting, inverting, output}
struct Part {
  PartKind kind;
  std::string name;
  std::vector<std::string> nodes;
  double value = 0.0;
};

struct Netlist {
  std::vector<Part> parts;
  wdf::DiodeParams diode;
};

// The wave-digital circuits in gain_stage.hpp realise exactly these
// netlists; the summing node is a virtual ground, so standalone sub-circuits
// return their output branches to "0".

// FF-1 alone: in -C3- a -R7- x ; x -C16- 0 ; x -R19- 0
Netlist ff1_netlist(const ComponentConfig& cfg);
// FF-1 joined with the pre-amp input: ff1 plus a -R6- 0. Taps: v(a), i(R19).
Netlist ff1_preamp_netlist(const ComponentConfig& cfg);
// FF-2 driven by the amp output: in -Rsrc- b ; b -C_ff2_shunt- 0 ; b -R_ff2_out- b2 -C_ff2_out- 0.
// Rsrc = R_ff2 + max((1 - gain) RV1, 1). Tap: i(C_ff2_out).
Netlist ff2_netlist(const ComponentConfig& cfg, double gain);
// Clipper driven by the amp output: in -R_clip_in- c1 -C_clip- d ; d -D- 0 ; d -R_clip_out- 0.
// Taps: v(d), i(R_clip_out).
Netlist clipper_netlist(const ComponentConfig& cfg);
// Whole gain stage with ideal op-amps (pre-amp follower, non-inverting amp,
// inverting summer). Output node "out".
Netlist gain_stage_netlist(const ComponentConfig& cfg, double gain);

// Gain pot split, each segment clamped to >= 1 ohm.
struct PotSplit {
  double upper;  // (1 - position) * total
  double lower;  // position * total
};
PotSplit split_pot(double total, double position);

}  // namespace klon::circuit
