#pragma once

// Operations shared by the command-line tool and the HTTP service. Both call
// render() so that identical input and parameters give identical bytes.

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klon/analysis.hpp"
#include "klon/component_config.hpp"
#include "klon/error.hpp"
#include "klon/pedal.hpp"
#include "klon/rnn.hpp"
#include "klon/wav.hpp"

namespace klon::app {

inline constexpr const char* kVersion = "0.3.0";

// Process exit codes, one per error class.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,         // anything not listed below
  kExitUsage = 2,           // bad flags or a control outside [0, 1]
  kExitUnreadable = 3,      // input missing, unreadable or not a WAV file
  kExitEncoding = 4,        // WAV encoding or channel count not supported
  kExitSampleRate = 5,      // neural engine at a rate other than 44100 Hz
  kExitBadData = 6,         // weight file or component config rejected
  kExitPortInUse = 7,       // serve: port already bound
};

class PortInUseError : public Error {
 public:
  using Error::Error;
};

int exit_code_for(const std::exception& e);

// HTTP status for an error raised while serving a request:
// 422 ParamError, 409 SampleRateError, 415 UnsupportedEncodingError,
// 400 other WavError, 500 anything else.
int http_status_for(const std::exception& e);

// Component values and weights for a run. Defaults: the built-in Centaur
// values and the built-in demonstration bank.
struct Resources {
  ComponentConfig config = ComponentConfig::centaur();
  rnn::ModelBank bank = rnn::make_demo_bank();
};
Resources load_resources(const std::optional<std::string>& config_path, const std::optional<std::string>& weights_path);

inline constexpr std::size_t kRenderBlock = 512;

// Runs a fresh pedal over `in` at `fs`.
std::vector<double> render(const Resources& res, double fs, const PedalParams& params, std::span<const double> in);
// Decoded WAV in, WAV bytes out, mono, same rate and encoding as the input.
std::vector<std::uint8_t> render_wav(const Resources& res, const wav::Audio& in, const PedalParams& params);

struct ProcessResult {
  std::vector<std::uint8_t> bytes;
  double peak = 0.0;
  std::size_t clipped = 0;  // samples beyond full scale
};
ProcessResult process_audio(const Resources& res, const wav::Audio& in, const PedalParams& params);

// Response probing. Digital columns are the tone stage alone (`chain` false)
// or the whole pedal with `engine` at small signal (`chain` true); analog
// columns are the tone stage's continuous-time prototype.
struct ResponseOptions {
  std::vector<double> trebles = {0.0, 0.5, 1.0};
  bool chain = false;
  PedalParams params;  // gain, level and engine when `chain` is set
  double fs = 44100.0;
  std::vector<double> frequencies = analysis::log_frequencies(20.0, 20000.0, 61);
};
struct ResponseTable {
  std::vector<double> frequencies_hz;
  std::vector<std::vector<double>> digital_db;  // one per treble
  std::vector<std::vector<double>> analog_db;
};
ResponseTable response_table(const Resources& res, const ResponseOptions& opt);
std::string response_csv(const ResponseTable& table, const std::vector<double>& trebles);

analysis::BenchReport run_bench(const Resources& res, double duration_s, std::span<const std::size_t> block_sizes,
                                std::size_t repetitions = 5);

// Command bodies; they report to `out`/`err` and return an exit code.
struct ProcessArgs {
  std::string in_path;
  std::string out_path;
  PedalParams params;
};
int cmd_process(const Resources& res, const ProcessArgs& args, std::ostream& out, std::ostream& err);
int cmd_response(const Resources& res, const ResponseOptions& opt, const std::string& out_path, std::ostream& out,
                 std::ostream& err);
int cmd_bench(const Resources& res, double duration_s, const std::string& out_path, std::ostream& out,
              std::ostream& err);
int cmd_esr(const std::string& reference_path, const std::string& estimate_path, std::ostream& out, std::ostream& err);

}  // namespace klon::app
