#include "klon/gain_stage.hpp"

#include <algorithm>

#include "klon/error.hpp"

namespace klon::circuits {

using namespace klon::wdf;

Ff1Circuit::Ff1Circuit(const ComponentConfig& cfg, double fs)
    : tree_([&] {
        auto c16 = std::make_unique<Capacitor>(cfg.get("C16"), fs);
        auto r19 = std::make_unique<ResistiveVoltageSource>(cfg.get("R19"), 0.0);
        c16_ = c16.get();
        r19_ = r19.get();
        auto p1 = make_parallel(std::move(c16), std::move(r19));
        auto s2 = make_series(std::make_unique<Resistor>(cfg.get("R7")), std::move(p1));
        auto s1 = make_series(std::make_unique<Capacitor>(cfg.get("C3"), fs), std::move(s2));
        return Tree(std::make_unique<IdealVoltageSource>(), std::move(s1));
      }()) {
  tree_.set_input(static_cast<VoltageSource&>(tree_.root()));
}

Ff1PreampCircuit::Ff1PreampCircuit(const ComponentConfig& cfg, double fs)
    : tree_([&] {
        auto r19 = std::make_unique<ResistiveVoltageSource>(cfg.get("R19"), 0.0);
        r19_ = r19.get();
        auto p1 = make_parallel(std::make_unique<Capacitor>(cfg.get("C16"), fs), std::move(r19));
        auto s2 = make_series(std::make_unique<Resistor>(cfg.get("R7")), std::move(p1));
        auto p0 = make_parallel(std::make_unique<Resistor>(cfg.get("R6")), std::move(s2));
        shared_ = p0.get();
        auto s1 = make_series(std::make_unique<Capacitor>(cfg.get("C3"), fs), std::move(p0));
        return Tree(std::make_unique<IdealVoltageSource>(), std::move(s1));
      }()) {
  tree_.set_input(static_cast<VoltageSource&>(tree_.root()));
}

Ff2Circuit::Ff2Circuit(const ComponentConfig& cfg, double gain, double fs)
    : r_base_(cfg.get("R_ff2")),
      rv1_(cfg.get("RV1")),
      gain_(std::clamp(gain, 0.0, 1.0)),
      tree_([&] {
        auto src = std::make_unique<ResistiveVoltageSource>(r_base_ + circuit::split_pot(rv1_, gain_).upper);
        source_ = src.get();
        auto c_out = std::make_unique<Capacitor>(cfg.get("C_ff2_out"), fs);
        c_out_ = c_out.get();
        auto branch = make_series(std::make_unique<Resistor>(cfg.get("R_ff2_out")), std::move(c_out));
        auto body = make_parallel(std::make_unique<Capacitor>(cfg.get("C_ff2_shunt"), fs), std::move(branch));
        return Tree(std::move(src), std::move(body));
      }()) {
  tree_.set_input(*source_);
}

void Ff2Circuit::set_gain(double gain) {
  gain_ = std::clamp(gain, 0.0, 1.0);
  source_->set_resistance(r_base_ + circuit::split_pot(rv1_, gain_).upper);
}

ClipperCircuit::ClipperCircuit(const ComponentConfig& cfg, double fs)
    : tree_([&] {
        auto src = std::make_unique<ResistiveVoltageSource>(cfg.get("R_clip_in"));
        auto* src_ptr = src.get();
        auto r_out = std::make_unique<Resistor>(cfg.get("R_clip_out"));
        r_out_ = r_out.get();
        auto branch = make_series(std::move(src), std::make_unique<Capacitor>(cfg.get("C_clip"), fs));
        auto body = make_parallel(std::move(r_out), std::move(branch));
        Tree t(std::make_unique<DiodePair>(DiodeParams::from_config(cfg)), std::move(body));
        t.set_input(*src_ptr);
        return t;
      }()) {}

Ff1Circuit build_ff1(const ComponentConfig& cfg, double fs) { return Ff1Circuit(cfg, fs); }
Ff1PreampCircuit build_ff1_preamp(const ComponentConfig& cfg, double fs) { return Ff1PreampCircuit(cfg, fs); }
Ff2Circuit build_ff2(const ComponentConfig& cfg, double gain, double fs) { return Ff2Circuit(cfg, gain, fs); }
ClipperCircuit build_clipper(const ComponentConfig& cfg, double fs) { return ClipperCircuit(cfg, fs); }

TraditionalGainStage::TraditionalGainStage(const ComponentConfig& cfg, double fs, double gain)
    : cfg_(cfg),
      fs_(fs),
      gain_(std::clamp(gain, 0.0, 1.0)),
      r_sum_in_(cfg.get("R_sum_in")),
      ff1_(cfg, fs),
      ff2_(cfg, gain_, fs),
      clipper_(cfg, fs),
      amp_(linear::stage_coeffs(linear::make_stage_config(cfg, linear::StageId::amp_stage, gain_), fs)),
      summing_(linear::stage_coeffs(linear::make_stage_config(cfg, linear::StageId::summing_amp), fs)) {
  if (!(fs > 0.0)) throw ConfigError("sample rate must be positive");
}

void TraditionalGainStage::set_gain(double gain) {
  gain = std::clamp(gain, 0.0, 1.0);
  if (gain == gain_) return;
  gain_ = gain;
  amp_.set_coeffs(linear::stage_coeffs(linear::make_stage_config(cfg_, linear::StageId::amp_stage, gain_), fs_));
  ff2_.set_gain(gain_);
}

double TraditionalGainStage::process(double x) {
  ff1_.process(x);
  taps_.preamp = ff1_.preamp_out();
  taps_.i_ff1 = ff1_.ff1_current();

  taps_.amp = amp_.process(taps_.preamp);

  clipper_.process(taps_.amp);
  ff2_.process(taps_.amp);
  taps_.i_clip = clipper_.current();
  taps_.i_ff2 = ff2_.current();

  return summing_.process(r_sum_in_ * (taps_.i_ff1 + taps_.i_ff2 + taps_.i_clip));
}

void TraditionalGainStage::process(std::span<double> block) {
  for (double& s : block) s = process(s);
}

void TraditionalGainStage::reset() {
  ff1_.reset();
  ff2_.reset();
  clipper_.reset();
  amp_.reset();
  summing_.reset();
  taps_ = {};
}

}  // namespace klon::circuits
