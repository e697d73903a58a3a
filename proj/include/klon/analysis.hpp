#pragma once

// Measurement tools: error-to-signal ratio, sine-probe frequency response and
// the block-size throughput benchmark.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace klon::analysis {

struct EsrReport {
  double esr = 0.0;
  std::size_t n = 0;
};

// sum |y - yhat|^2 / sum |y|^2, with y the reference. Throws AnalysisError on
// a length mismatch or an all-zero reference.
EsrReport esr(std::span<const double> y, std::span<const double> yhat);

// Deterministic plucked-string test signal (Karplus-Strong notes with random
// pitch, spacing and velocity), peak 0.5.
std::vector<double> guitar_like_signal(double fs, double seconds, std::uint64_t seed = 1);

// Uniform white noise in [-amplitude, amplitude].
std::vector<double> white_noise(std::size_t n, double amplitude, std::uint64_t seed = 1);

// n log-spaced frequencies from lo to hi inclusive.
std::vector<double> log_frequencies(double lo, double hi, std::size_t n);

// A stateful in-place block processor, and a way to make fresh ones.
using Processor = std::function<void(std::span<double>)>;
using ProcessorFactory = std::function<Processor()>;

struct ResponseCurve {
  std::vector<double> frequencies_hz;
  std::vector<double> magnitudes_db;
};

inline constexpr double kWarmupSeconds = 0.2;

// For each frequency a fresh processor is driven with a sine of the given
// amplitude; after the warm-up, cosine, sine and DC are fitted to the output
// by least squares and the fundamental's gain is reported in dB. Throws
// AnalysisError for frequencies outside (0, fs/2) or not strictly increasing.
ResponseCurve freq_response(const ProcessorFactory& factory, std::span<const double> freqs, double fs,
                            double amplitude = 1e-3);

inline constexpr std::array<std::size_t, 10> kBenchBlockSizes = {8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096};

// Reference timings from a 2.9 GHz 2017 laptop, for side-by-side display only.
struct BenchReference {
  std::size_t block_size;
  double traditional;
  double neural;
};
inline constexpr std::array<BenchReference, 10> kBenchReference = {{
    {8, 0.0723437, 0.0528792},   {16, 0.0703079, 0.0510437},   {32, 0.0652856, 0.0511147},
    {64, 0.0662835, 0.0502434},  {128, 0.0666593, 0.0495194},  {256, 0.0696844, 0.0480298},
    {512, 0.0669037, 0.0477946}, {1024, 0.060816, 0.0488841},  {2048, 0.0695175, 0.0488309},
    {4096, 0.0623839, 0.0472191},
}};

struct BenchRow {
  std::size_t block_size = 0;
  std::string engine;
  double compute_time_per_audio_second = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double duration_s = 0.0;
  double fs = 0.0;
  std::size_t repetitions = 0;

  // Throws AnalysisError if the cell is missing.
  double time(const std::string& engine, std::size_t block_size) const;
  std::vector<std::string> engines() const;
  std::vector<std::size_t> block_sizes() const;

  // Block size down the side, one column per engine, plus the reference
  // columns when the engines are "traditional" and "neural".
  std::string to_table() const;
  std::string to_json() const;
  static BenchReport from_json(const std::string& text);
};

using EngineProcessorFactory = std::function<Processor(const std::string& engine)>;

// For each engine and block size: one untimed warm-up pass, then
// `repetitions` timed passes over the same pre-generated noise, each with a
// fresh processor. Reports the median wall time divided by duration_s.
BenchReport benchmark(const EngineProcessorFactory& factory, const std::vector<std::string>& engines,
                      std::span<const std::size_t> block_sizes, double duration_s, double fs,
                      std::size_t repetitions = 5);

}  // namespace klon::analysis
