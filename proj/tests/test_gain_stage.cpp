#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "klon/analysis.hpp"
#include "klon/component_config.hpp"
#include "klon/error.hpp"
#include "klon/gain_stage.hpp"
#include "klon/netlist.hpp"
#include "oracle/gain_stage_reference.hpp"
#include "oracle/mna.hpp"

using namespace klon;
using namespace klon::circuits;

namespace {

std::vector<double> noise(std::size_t n, unsigned seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = amp * (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  return x;
}

std::vector<double> sine(std::size_t n, double hz, double amp, double fs) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / fs);
  return x;
}

struct RelErr {
  double max_diff = 0.0;
  double max_ref = 0.0;
  void add(double got, double ref) {
    max_diff = std::max(max_diff, std::abs(got - ref));
    max_ref = std::max(max_ref, std::abs(ref));
  }
  double value() const { return max_ref > 0.0 ? max_diff / max_ref : max_diff; }
};

// Single-bin DFT magnitude over the whole of x.
double bin_magnitude(const std::vector<double>& x, double hz, double fs) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * hz * i / fs);
  return std::abs(acc) * 2.0 / static_cast<double>(x.size());
}

const ComponentConfig& cfg() { return ComponentConfig::centaur(); }

}  // namespace

TEST_CASE("FF-1 / pre-amp joint tree") {
  SUBCASE("silence in, silence out") {
    auto c = build_ff1_preamp(cfg(), 44100.0);
    for (int n = 0; n < 1000; ++n) {
      c.process(0.0);
      CHECK(c.preamp_out() == 0.0);
      CHECK(c.ff1_current() == 0.0);
    }
  }
  SUBCASE("matches MNA on a 100 Hz sine and on noise") {
    for (double fs : {44100.0, 48000.0}) {
      for (const auto& x : {sine(static_cast<std::size_t>(fs), 100.0, 0.5, fs), noise(static_cast<std::size_t>(fs), 21)}) {
        auto c = build_ff1_preamp(cfg(), fs);
        oracle::MnaSim mna(circuit::ff1_preamp_netlist(cfg()), fs);
        RelErr ev, ei;
        for (double v : x) {
          c.process(v);
          mna.step(v);
          ev.add(c.preamp_out(), mna.v("a"));
          ei.add(c.ff1_current(), mna.i("R19"));
        }
        CHECK(ev.value() < 1e-6);
        CHECK(ei.value() < 1e-6);
      }
    }
  }
  SUBCASE("missing component") {
    auto partial = cfg();
    auto values = partial.values();
    values.erase("R7");
    ComponentConfig broken;
    for (const auto& [k, v] : values) broken.set(k, v);
    CHECK_THROWS_AS(build_ff1_preamp(broken, 44100.0), MissingComponentError);
    CHECK_THROWS_AS(TraditionalGainStage(broken, 44100.0), MissingComponentError);
  }
}

TEST_CASE("FF-2 tree") {
  for (double fs : {44100.0, 48000.0}) {
    const auto x = noise(static_cast<std::size_t>(fs), 22);
    std::vector<double> currents[2];
    int slot = 0;
    for (double gain : {0.0, 1.0}) {
      auto c = build_ff2(cfg(), gain, fs);
      oracle::MnaSim mna(circuit::ff2_netlist(cfg(), gain), fs);
      RelErr ei;
      for (double v : x) {
        c.process(v);
        mna.step(v);
        ei.add(c.current(), mna.i("C_ff2_out"));
        currents[slot].push_back(c.current());
      }
      CHECK(ei.value() < 1e-6);
      ++slot;
    }
    CHECK(analysis::esr(currents[0], currents[1]).esr > 1e-3);
  }
}

TEST_CASE("clipper tree") {
  const double fs = 44100.0;
  SUBCASE("small signal is linear") {
    auto a = build_clipper(cfg(), fs);
    auto b = build_clipper(cfg(), fs);
    RelErr e;
    for (double v : sine(8820, 440.0, 1e-3, fs)) {
      a.process(v);
      b.process(2.0 * v);
      e.add(b.current(), 2.0 * a.current());
    }
    CHECK(e.value() < 1e-3);
  }
  SUBCASE("large drive is flattened near the knee") {
    auto c = build_clipper(cfg(), fs);
    const auto params = wdf::DiodeParams::from_config(cfg());
    double peak = 0.0;
    int n = 0;
    for (double v : sine(8820, 220.0, 5.0, fs)) {
      c.process(v);
      if (n++ > 2000) peak = std::max(peak, std::abs(c.diode_voltage()));
      // Per-sample check of the root: v_d and the diode current satisfy the port equation.
      const auto& root = c.tree().root();
      const double i_d = wdf::diode_pair_current(root.voltage(), params);
      CHECK(std::abs(i_d - root.current()) <= 1e-12 + 1e-9 * std::abs(i_d));
    }
    CHECK(peak > 0.3);
    CHECK(peak < 0.8);
  }
  SUBCASE("matches MNA with a Newton-solved diode") {
    for (double amp : {0.01, 1.0, 5.0}) {
      auto c = build_clipper(cfg(), fs);
      oracle::MnaSim mna(circuit::clipper_netlist(cfg()), fs);
      RelErr ev, ei;
      for (double v : noise(static_cast<std::size_t>(fs / 2), 23, amp)) {
        c.process(v);
        mna.step(v);
        ev.add(c.diode_voltage(), mna.v("d"));
        ei.add(c.current(), mna.i("R_clip_out"));
      }
      CHECK(ev.value() < 1e-6);
      CHECK(ei.value() < 1e-6);
    }
  }
}

TEST_CASE("traditional gain stage") {
  SUBCASE("zero in, zero out") {
    TraditionalGainStage g(cfg(), 44100.0);
    for (int n = 0; n < 1000; ++n) CHECK(g.process(0.0) == 0.0);
  }
  SUBCASE("small-signal linearity") {
    TraditionalGainStage a(cfg(), 44100.0), b(cfg(), 44100.0);
    RelErr e;
    for (double v : sine(8820, 330.0, 1e-3, 44100.0)) e.add(b.process(2.0 * v), 2.0 * a.process(v));
    CHECK(e.value() < 1e-3);
  }
  SUBCASE("100 mV at 220 Hz produces harmonics") {
    const double fs = 44100.0;
    TraditionalGainStage g(cfg(), fs, 0.5);
    const auto x = sine(static_cast<std::size_t>(fs), 220.0, 0.1, fs);
    std::vector<double> y;
    for (double v : x) y.push_back(g.process(v));
    const std::vector<double> tail(y.begin() + 22050, y.end());  // 110 whole periods
    const double h1 = bin_magnitude(tail, 220.0, fs);
    const double h2 = bin_magnitude(tail, 440.0, fs);
    const double h3 = bin_magnitude(tail, 660.0, fs);
    CHECK(h1 > 0.0);
    CHECK(20.0 * std::log10(std::max(h2, h3) / h1) > -60.0);
  }
  SUBCASE("matches the whole-circuit MNA reference at every grid gain") {
    for (double fs : {44100.0, 48000.0}) {
      const auto x = analysis::guitar_like_signal(fs, 1.0, 5);
      for (double gain : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        TraditionalGainStage g(cfg(), fs, gain);
        oracle::GainStageReference ref(cfg(), fs, gain);
        std::vector<double> y, yr;
        for (double v : x) {
          y.push_back(g.process(v));
          yr.push_back(ref.process(v));
        }
        const double e = analysis::esr(yr, y).esr;
        CAPTURE(fs);
        CAPTURE(gain);
        CHECK(e < 1e-2);
        CHECK(e < 1e-8);  // both are the same trapezoidal discretisation
      }
    }
  }
  SUBCASE("gain continuity") {
    const auto x = analysis::guitar_like_signal(44100.0, 0.25, 6);
    for (double gain : {0.1, 0.5, 0.9}) {
      TraditionalGainStage a(cfg(), 44100.0, gain), b(cfg(), 44100.0, gain + 1e-3);
      std::vector<double> ya, yb;
      for (double v : x) {
        ya.push_back(a.process(v));
        yb.push_back(b.process(v));
      }
      CHECK(std::sqrt(analysis::esr(ya, yb).esr) < 1e-2);
    }
  }
  SUBCASE("gain change then back, after a flush, equals never changing") {
    const auto x = noise(4000, 7, 0.2);
    TraditionalGainStage a(cfg(), 44100.0, 0.3), fresh(cfg(), 44100.0, 0.3);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i == 1000) a.set_gain(0.95);
      a.process(x[i]);
    }
    a.set_gain(0.3);
    a.reset();
    for (double v : x) CHECK(a.process(v) == fresh.process(v));
    CHECK(a.amp_coeffs().b0 == fresh.amp_coeffs().b0);
  }
  SUBCASE("block and per-sample processing agree") {
    const auto x = noise(4096, 8, 0.5);
    TraditionalGainStage a(cfg(), 44100.0), b(cfg(), 44100.0);
    std::vector<double> blk = x;
    for (std::size_t off = 0; off < blk.size(); off += 64) b.process(std::span<double>(blk).subspan(off, 64));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.process(x[i]) == blk[i]);
  }
}
