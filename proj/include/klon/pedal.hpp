#pragma once

// The full signal chain: input buffer -> gain stage (traditional circuit
// model or neural bank) -> tone -> output buffer -> level.

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "klon/component_config.hpp"
#include "klon/gain_stage.hpp"
#include "klon/linear_stages.hpp"
#include "klon/rnn.hpp"

namespace klon {

enum class Engine { traditional, neural };

std::string_view to_string(Engine e);
Engine parse_engine(std::string_view name);  // throws ParamError

struct PedalParams {
  double gain = 0.5;
  double treble = 0.5;
  double level = 0.5;
  Engine engine = Engine::traditional;

  // Throws ParamError if any control is outside [0, 1] or not finite.
  void validate() const;
  bool operator==(const PedalParams&) const = default;
};

// The neural engine only exists at the rate its models were trained at.
inline constexpr double kNeuralSampleRate = 44100.0;

struct PedalOptions {
  double smoothing_seconds = 0.020;   // one-pole time constant for every control
  std::size_t control_interval = 32;  // samples between coefficient updates
  std::size_t crossfade_samples = 2048;
  double level_exponent = 2.0;        // output gain = level^exponent (audio-taper stand-in)
};

// Parameter handoff from a control thread (sequence lock over atomics).
// One writer calls publish(), one reader calls read(); the reader never
// waits: if a write is in flight it keeps the previous snapshot.
class ParamSnapshot {
 public:
  explicit ParamSnapshot(const PedalParams& initial = {});
  void publish(const PedalParams& p);
  PedalParams read() const;

 private:
  std::atomic<std::uint64_t> seq_{0};
  std::atomic<double> gain_, treble_, level_;
  std::atomic<int> engine_;
  mutable PedalParams last_;
};

class Pedal {
 public:
  // Throws SampleRateError if fs <= 0. The neural engine is available only
  // when fs == 44100 and a bank is given. Its models start from their
  // zero-input rest states and the rest output is subtracted, so silence
  // stays silent instead of producing a bias step.
  Pedal(const ComponentConfig& cfg, double fs, std::optional<rnn::ModelBank> bank = std::nullopt,
        PedalOptions options = {});

  double sample_rate() const { return fs_; }
  bool neural_available() const { return bank_.has_value(); }
  const PedalOptions& options() const { return options_; }

  // Processes `block` in place. Throws ParamError on invalid params and
  // SampleRateError if the neural engine is requested but unavailable.
  // Control changes are smoothed; on the first call (or after reset) the
  // smoothers start at the requested values.
  void process_block(const PedalParams& params, std::span<double> block);
  void reset();

  // Smoothed control values as last applied.
  struct Controls {
    double gain = 0.0;
    double treble = 0.0;
    double level = 0.0;
  };
  const Controls& controls() const { return ctl_; }
  const linear::FirstOrderCoeffs& tone_coeffs() const { return tone_.coeffs(); }
  Engine active_engine() const { return engine_; }
  bool crossfading() const { return fade_pos_ < options_.crossfade_samples && fade_from_.has_value(); }
  std::uint64_t samples_processed() const { return pos_; }

  const circuits::TraditionalGainStage& traditional() const { return traditional_; }
  const rnn::ModelBank* neural() const { return bank_ ? &*bank_ : nullptr; }

  // Upper bound on |output| for inputs in [-1, 1] at any control setting,
  // from the L1 norms of the linear sections and the passivity of the clipper
  // (traditional) or |h| <= 1 (neural).
  double output_bound(Engine e) const;

  // Per-update smoother coefficient for a step of `samples` samples.
  double smoothing_alpha(std::size_t samples) const;

 private:
  void control_tick(const PedalParams& target);
  void run_engine(Engine e, std::span<double> chunk);
  void reset_neural();

  ComponentConfig cfg_;
  double fs_;
  PedalOptions options_;
  linear::FirstOrderFilter input_;
  circuits::TraditionalGainStage traditional_;
  std::optional<rnn::ModelBank> bank_;
  std::array<rnn::Vec, rnn::kBankSize> rest_h_{};
  std::array<double, rnn::kBankSize> rest_y_{};
  linear::FirstOrderFilter tone_;
  linear::FirstOrderFilter output_;

  Controls ctl_;
  bool primed_ = false;
  Engine engine_ = Engine::traditional;
  std::optional<Engine> fade_from_;
  std::size_t fade_pos_ = 0;
  std::uint64_t pos_ = 0;
  double tick_alpha_ = 0.0;
  double sample_alpha_ = 0.0;
  double applied_treble_ = -1.0;
  std::vector<double> scratch_;
};

}  // namespace klon
