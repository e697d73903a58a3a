#include "klon/pedal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "klon/error.hpp"

namespace klon {
namespace {

constexpr double kSnap = 1e-9;

linear::FirstOrderCoeffs coeffs(const ComponentConfig& cfg, linear::StageId id, double fs, double control = 0.5) {
  return linear::stage_coeffs(linear::make_stage_config(cfg, id, control), fs);
}

// Sum of |h[n]| for y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1].
double l1_first_order(const linear::FirstOrderCoeffs& c) {
  const double tail = std::abs(c.b1 - c.a1 * c.b0);
  if (tail == 0.0) return std::abs(c.b0);
  return std::abs(c.b0) + tail / (1.0 - std::abs(c.a1));
}

double smooth(double current, double target, double alpha) {
  const double next = current + (target - current) * alpha;
  return std::abs(target - next) < kSnap ? target : next;
}

}  // namespace

std::string_view to_string(Engine e) { return e == Engine::neural ? "neural" : "traditional"; }

Engine parse_engine(std::string_view name) {
  if (name == "traditional") return Engine::traditional;
  if (name == "neural") return Engine::neural;
  throw ParamError("unknown engine '" + std::string(name) + "' (expected traditional or neural)");
}

void PedalParams::validate() const {
  const auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParamError(std::string(name) + " must be in [0, 1], got " + std::to_string(v));
  };
  check(gain, "gain");
  check(treble, "treble");
  check(level, "level");
}

ParamSnapshot::ParamSnapshot(const PedalParams& initial)
    : gain_(initial.gain), treble_(initial.treble), level_(initial.level),
      engine_(static_cast<int>(initial.engine)), last_(initial) {}

void ParamSnapshot::publish(const PedalParams& p) {
  const auto s = seq_.load(std::memory_order_relaxed);
  seq_.store(s + 1, std::memory_order_relaxed);
  std::atomic_thread_fence(std::memory_order_release);
  gain_.store(p.gain, std::memory_order_relaxed);
  treble_.store(p.treble, std::memory_order_relaxed);
  level_.store(p.level, std::memory_order_relaxed);
  engine_.store(static_cast<int>(p.engine), std::memory_order_relaxed);
  seq_.store(s + 2, std::memory_order_release);
}

PedalParams ParamSnapshot::read() const {
  for (int attempt = 0; attempt < 4; ++attempt) {
    const auto s1 = seq_.load(std::memory_order_acquire);
    if (s1 & 1u) continue;
    PedalParams p;
    p.gain = gain_.load(std::memory_order_relaxed);
    p.treble = treble_.load(std::memory_order_relaxed);
    p.level = level_.load(std::memory_order_relaxed);
    p.engine = static_cast<Engine>(engine_.load(std::memory_order_relaxed));
    std::atomic_thread_fence(std::memory_order_acquire);
    if (seq_.load(std::memory_order_relaxed) == s1) {
      last_ = p;
      return p;
    }
  }
  return last_;
}

Pedal::Pedal(const ComponentConfig& cfg, double fs, std::optional<rnn::ModelBank> bank, PedalOptions options)
    : cfg_(cfg),
      fs_(fs > 0.0 ? fs : throw SampleRateError("sample rate must be positive, got " + std::to_string(fs))),
      options_(options),
      input_(coeffs(cfg, linear::StageId::input_buffer, fs)),
      traditional_(cfg, fs),
      tone_(coeffs(cfg, linear::StageId::tone, fs)),
      output_(coeffs(cfg, linear::StageId::output_buffer, fs)) {
  if (options_.control_interval == 0) throw ConfigError("control interval must be at least one sample");
  if (bank && fs == kNeuralSampleRate) {
    bank_ = std::move(bank);
    for (std::size_t k = 0; k < rnn::kBankSize; ++k) {
      // Iterate on silence until the state stops changing (or give up
      // after 10 s of audio and take where it got to).
      rnn::GruModel m = bank_->model(k);
      m.reset();
      for (int n = 0; n < 441000; ++n) {
        const rnn::Vec before = m.hidden();
        if (m.step(0.0) == before) break;
      }
      rest_h_[k] = m.hidden();
      rest_y_[k] = m.process(0.0);
    }
    reset_neural();
  }
  tick_alpha_ = smoothing_alpha(options_.control_interval);
  sample_alpha_ = smoothing_alpha(1);
  scratch_.resize(options_.control_interval);
}

double Pedal::smoothing_alpha(std::size_t samples) const {
  if (options_.smoothing_seconds <= 0.0) return 1.0;
  return 1.0 - std::exp(-static_cast<double>(samples) / (options_.smoothing_seconds * fs_));
}

void Pedal::reset() {
  input_.reset();
  traditional_.reset();
  if (bank_) reset_neural();
  tone_.reset();
  output_.reset();
  primed_ = false;
  fade_from_.reset();
  fade_pos_ = 0;
  pos_ = 0;
  applied_treble_ = -1.0;
}

void Pedal::control_tick(const PedalParams& target) {
  ctl_.gain = smooth(ctl_.gain, target.gain, tick_alpha_);
  ctl_.treble = smooth(ctl_.treble, target.treble, tick_alpha_);
  if (ctl_.treble != applied_treble_) {
    tone_.set_coeffs(coeffs(cfg_, linear::StageId::tone, fs_, ctl_.treble));
    applied_treble_ = ctl_.treble;
  }
}

void Pedal::run_engine(Engine e, std::span<double> chunk) {
  if (e == Engine::traditional) {
    traditional_.set_gain(ctl_.gain);
    traditional_.process(chunk);
  } else {
    bank_->process(ctl_.gain, chunk, chunk);
    // Same expression as the bank's crossfade, so a model at rest cancels exactly.
    const auto b = rnn::blend_for_gain(ctl_.gain);
    const double rest = (1.0 - b.w) * rest_y_[b.lo] + b.w * rest_y_[b.lo + 1];
    for (double& s : chunk) s -= rest;
  }
}

void Pedal::reset_neural() {
  for (std::size_t k = 0; k < rnn::kBankSize; ++k) bank_->model(k).set_hidden(rest_h_[k]);
}

void Pedal::process_block(const PedalParams& params, std::span<double> block) {
  params.validate();
  if (params.engine == Engine::neural && !bank_) {
    if (fs_ != kNeuralSampleRate) {
      throw SampleRateError("neural engine requires a 44100 Hz sample rate (pedal runs at " + std::to_string(fs_) + " Hz)");
    }
    throw SampleRateError("neural engine unavailable: no model bank loaded");
  }

  if (!primed_) {
    ctl_ = {params.gain, params.treble, params.level};
    applied_treble_ = -1.0;
    control_tick(params);
    engine_ = params.engine;
    primed_ = true;
  } else if (params.engine != engine_) {
    fade_from_ = engine_;
    engine_ = params.engine;
    fade_pos_ = 0;
    // The incoming engine starts from silence so its output does not depend
    // on how long ago it last ran.
    if (engine_ == Engine::traditional) traditional_.reset(); else reset_neural();
  }

  const std::size_t interval = options_.control_interval;
  const bool unit_level = options_.level_exponent == 2.0;
  std::size_t i = 0;
  while (i < block.size()) {
    const std::size_t phase = static_cast<std::size_t>(pos_ % interval);
    if (phase == 0) control_tick(params);
    const std::size_t len = std::min(block.size() - i, interval - phase);
    const auto chunk = block.subspan(i, len);

    input_.process(chunk);
    if (fade_from_) {
      const auto other = std::span(scratch_).first(len);
      std::copy(chunk.begin(), chunk.end(), other.begin());
      run_engine(*fade_from_, other);
      run_engine(engine_, chunk);
      const double n = static_cast<double>(options_.crossfade_samples);
      for (std::size_t k = 0; k < len; ++k) {
        const double f = std::min(1.0, static_cast<double>(++fade_pos_) / n);
        chunk[k] = (1.0 - f) * other[k] + f * chunk[k];
      }
      if (fade_pos_ >= options_.crossfade_samples) fade_from_.reset();
    } else {
      run_engine(engine_, chunk);
    }
    tone_.process(chunk);
    output_.process(chunk);

    for (double& s : chunk) {
      ctl_.level = smooth(ctl_.level, params.level, sample_alpha_);
      s *= unit_level ? ctl_.level * ctl_.level : std::pow(ctl_.level, options_.level_exponent);
    }
    pos_ += len;
    i += len;
  }
}

double Pedal::output_bound(Engine e) const {
  const double l1_out = l1_first_order(output_.coeffs());
  double l1_tone = 0.0;
  for (int k = 0; k <= 20; ++k) l1_tone = std::max(l1_tone, l1_first_order(coeffs(cfg_, linear::StageId::tone, fs_, k / 20.0)));

  if (e == Engine::neural) {
    if (!bank_) return 0.0;
    // |h_i| <= 1, so |y| <= |b| + sum |W_i| for every model and every blend;
    // the subtracted rest output is bounded the same way.
    double y = 0.0;
    for (std::size_t m = 0; m < rnn::kBankSize; ++m) {
      const auto& d = bank_->model(m).dense();
      double s = std::abs(d.b);
      for (double w : d.W) s += std::abs(w);
      y = std::max(y, s);
    }
    return 2.0 * y * l1_tone * l1_out;
  }

  // Traditional: impulse responses of the linear paths, truncated after one
  // second (every time constant is far shorter), with a small margin.
  const auto n = static_cast<std::size_t>(fs_);
  const auto in_c = coeffs(cfg_, linear::StageId::input_buffer, fs_);
  const double r_sum_in = cfg_.get("R_sum_in");
  const double l1_sum = l1_first_order(coeffs(cfg_, linear::StageId::summing_amp, fs_));
  // Clipper with the diodes removed: i(R_clip_out) per volt of amp output.
  const double c_clip = cfg_.get("C_clip");
  const double l1_clip = l1_first_order(linear::bilinear_transform(
      {c_clip, 0.0, c_clip * (cfg_.get("R_clip_in") + cfg_.get("R_clip_out")), 1.0}, fs_));

  double worst = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double gain = k / 20.0;
    linear::FirstOrderFilter in(in_c), amp(coeffs(cfg_, linear::StageId::amp_stage, fs_, gain));
    circuits::Ff1PreampCircuit ff1(cfg_, fs_);
    circuits::Ff2Circuit ff2(cfg_, gain, fs_);
    double l1_i1 = 0.0, l1_amp = 0.0, l1_ff2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double imp = t == 0 ? 1.0 : 0.0;
      ff1.process(in.process(imp));
      l1_i1 += std::abs(ff1.ff1_current());
      l1_amp += std::abs(amp.process(ff1.preamp_out()));
      ff2.process(imp);
      l1_ff2 += std::abs(ff2.current());
    }
    const double i_max = l1_i1 + l1_amp * (l1_ff2 + l1_clip);
    worst = std::max(worst, i_max * r_sum_in * l1_sum);
  }
  return 1.001 * worst * l1_tone * l1_out;
}

}  // namespace klon
