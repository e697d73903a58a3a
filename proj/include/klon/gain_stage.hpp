#pragma once

#include <span>

#include "klon/component_config.hpp"
#include "klon/linear_stages.hpp"
#include "klon/netlist.hpp"
#include "klon/wdf.hpp"

namespace klon::circuits {

// FF-1 on its own, tree S1{C3, S2{R7, P1{C16, S3{R19, V4.5}}}} under an
// ideal input source (the 4.5 V rail is an AC ground, so S3 is a 0 V
// resistive source). Realises circuit::ff1_netlist.
class Ff1Circuit {
 public:
  Ff1Circuit(const ComponentConfig& cfg, double fs);
  void process(double vin) { tree_.process(vin); }
  double node_voltage() const { return c16_->oriented_voltage(); }  // v(x)
  double r19_current() const { return r19_->oriented_current(); }  // x -> rail
  wdf::Tree& tree() { return tree_; }
  void reset() { tree_.reset(); }

 private:
  // Set while tree_ is being built, so declared first.
  wdf::Node* c16_ = nullptr;
  wdf::Node* r19_ = nullptr;
  wdf::Tree tree_;
};

// FF-1 joined with the pre-amp input, which share C3:
// S1{C3, P0{R6, S2{R7, P1{C16, R19}}}}. Realises circuit::ff1_preamp_netlist.
class Ff1PreampCircuit {
 public:
  Ff1PreampCircuit(const ComponentConfig& cfg, double fs);
  void process(double vin) { tree_.process(vin); }
  // Voltage at the shared node; the pre-amp is a unity follower of it.
  double preamp_out() const { return shared_->oriented_voltage(); }
  // FF-1 branch current into the summing node.
  double ff1_current() const { return r19_->oriented_current(); }
  wdf::Tree& tree() { return tree_; }
  void reset() { tree_.reset(); }

 private:
  wdf::Node* shared_ = nullptr;
  wdf::Node* r19_ = nullptr;
  wdf::Tree tree_;
};

// Root: Thevenin source (amp output behind R_ff2 + upper gain segment);
// body P{C_ff2_shunt, S{R_ff2_out, C_ff2_out}}. Realises circuit::ff2_netlist.
class Ff2Circuit {
 public:
  Ff2Circuit(const ComponentConfig& cfg, double gain, double fs);
  void set_gain(double gain);
  double gain() const { return gain_; }
  void process(double v_amp) { tree_.process(v_amp); }
  double current() const { return c_out_->oriented_current(); }
  wdf::Tree& tree() { return tree_; }
  void reset() { tree_.reset(); }

 private:
  double r_base_;
  double rv1_;
  double gain_;
  wdf::ResistiveVoltageSource* source_ = nullptr;
  wdf::Node* c_out_ = nullptr;
  wdf::Tree tree_;
};

// Root: diode pair; body P{R_clip_out, S{source behind R_clip_in, C_clip}}.
// Realises circuit::clipper_netlist.
class ClipperCircuit {
 public:
  ClipperCircuit(const ComponentConfig& cfg, double fs);
  void process(double v_amp) { tree_.process(v_amp); }
  double current() const { return r_out_->oriented_current(); }
  double diode_voltage() const { return tree_.body().oriented_voltage(); }
  wdf::Tree& tree() { return tree_; }
  void reset() { tree_.reset(); }

 private:
  wdf::Node* r_out_ = nullptr;
  wdf::Tree tree_;
};

Ff1Circuit build_ff1(const ComponentConfig& cfg, double fs);
Ff1PreampCircuit build_ff1_preamp(const ComponentConfig& cfg, double fs);
Ff2Circuit build_ff2(const ComponentConfig& cfg, double gain, double fs);
ClipperCircuit build_clipper(const ComponentConfig& cfg, double fs);

// The non-neural gain stage. Per sample: FF-1/pre-amp tree, nodal amp stage
// on the pre-amp voltage, clipper and FF-2 trees driven by the amp output,
// and the nodal summing amplifier fed with the summed branch currents
// (scaled by R_sum_in so the stage sees an equivalent input voltage).
class TraditionalGainStage {
 public:
  TraditionalGainStage(const ComponentConfig& cfg, double fs, double gain = 0.5);

  // Recomputes the amp-stage coefficients and re-adapts FF-2. State is kept.
  void set_gain(double gain);
  double gain() const { return gain_; }
  double sample_rate() const { return fs_; }

  double process(double x);
  void process(std::span<double> block);
  void reset();

  const linear::FirstOrderCoeffs& amp_coeffs() const { return amp_.coeffs(); }
  const linear::FirstOrderCoeffs& summing_coeffs() const { return summing_.coeffs(); }

  struct Taps {
    double preamp = 0.0;
    double amp = 0.0;
    double i_ff1 = 0.0;
    double i_ff2 = 0.0;
    double i_clip = 0.0;
  };
  const Taps& taps() const { return taps_; }

 private:
  ComponentConfig cfg_;
  double fs_;
  double gain_;
  double r_sum_in_;
  Ff1PreampCircuit ff1_;
  Ff2Circuit ff2_;
  ClipperCircuit clipper_;
  linear::FirstOrderFilter amp_;
  linear::FirstOrderFilter summing_;
  Taps taps_;
};

}  // namespace klon::circuits
