#include "klon/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "klon/error.hpp"
#include "klon/simd/kernels.hpp"

namespace klon::analysis {
namespace {

// Uniform in [0, 1) from the top 53 bits; identical on every platform, unlike
// std::uniform_real_distribution.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Solves the 3x3 system a x = b by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
  for (int c = 0; c < 3; ++c) {
    int p = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

std::string fmt(double v, const char* spec = "%.7f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

EsrReport esr(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) {
    throw AnalysisError("esr: length mismatch (" + std::to_string(y.size()) + " vs " + std::to_string(yhat.size()) + ")");
  }
  const auto& k = simd::kernels();
  const double energy = k.sum_sq(y.data(), y.size());
  if (energy == 0.0) throw AnalysisError("esr: reference signal has zero energy");
  return {k.sum_sq_diff(y.data(), yhat.data(), y.size()) / energy, y.size()};
}

std::vector<double> guitar_like_signal(double fs, double seconds, std::uint64_t seed) {
  if (!(fs > 0.0) || !(seconds > 0.0)) throw AnalysisError("guitar_like_signal: fs and duration must be positive");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(fs * seconds));
  std::vector<double> out(n, 0.0);
  std::vector<double> line;
  std::size_t head = 0;
  std::size_t next_note = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (t == next_note) {
      // E2 to E5, 0.15 to 0.6 s apart.
      const double f0 = 82.4 * std::pow(8.0, uniform(rng));
      const double velocity = 0.3 + 0.7 * uniform(rng);
      line.assign(std::max<std::size_t>(2, static_cast<std::size_t>(fs / f0)), 0.0);
      for (double& s : line) s = velocity * (2.0 * uniform(rng) - 1.0);
      head = 0;
      next_note = t + static_cast<std::size_t>(fs * (0.15 + 0.45 * uniform(rng)));
    }
    const std::size_t nxt = (head + 1) % line.size();
    const double y = line[head];
    line[head] = 0.996 * 0.5 * (line[head] + line[nxt]);
    head = nxt;
    out[t] = y;
  }
  double peak = 0.0;
  for (double s : out) peak = std::max(peak, std::abs(s));
  if (peak > 0.0) {
    for (double& s : out) s *= 0.5 / peak;
  }
  return out;
}

std::vector<double> white_noise(std::size_t n, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (double& s : out) s = amplitude * (2.0 * uniform(rng) - 1.0);
  return out;
}

std::vector<double> log_frequencies(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw AnalysisError("log_frequencies: need 0 < lo < hi and n >= 2");
  std::vector<double> f(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) f[i] = lo * std::exp(step * static_cast<double>(i));
  f.back() = hi;
  return f;
}

ResponseCurve freq_response(const ProcessorFactory& factory, std::span<const double> freqs, double fs,
                            double amplitude) {
  if (!(fs > 0.0)) throw AnalysisError("freq_response: fs must be positive");
  if (!(amplitude > 0.0)) throw AnalysisError("freq_response: amplitude must be positive");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!(freqs[i] > 0.0) || !(freqs[i] < fs / 2.0)) {
      throw AnalysisError("freq_response: " + fmt(freqs[i], "%g") + " Hz is not inside (0, fs/2)");
    }
    if (i > 0 && !(freqs[i] > freqs[i - 1])) throw AnalysisError("freq_response: frequencies must be strictly increasing");
  }
  ResponseCurve curve;
  curve.frequencies_hz.assign(freqs.begin(), freqs.end());
  const auto warm = static_cast<std::size_t>(std::ceil(kWarmupSeconds * fs));
  for (double f : freqs) {
    // At least 0.1 s and 10 periods of measurement.
    const auto measure = static_cast<std::size_t>(std::ceil(std::max(0.1 * fs, 10.0 * fs / f)));
    std::vector<double> x(warm + measure);
    const double w = 2.0 * std::numbers::pi * f / fs;
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = amplitude * std::sin(w * static_cast<double>(n));
    Processor p = factory();
    p(x);

    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> aty{};
    for (std::size_t n = warm; n < x.size(); ++n) {
      const double ph = w * static_cast<double>(n);
      const std::array<double, 3> row = {std::cos(ph), std::sin(ph), 1.0};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) ata[r][c] += row[r] * row[c];
        aty[r] += row[r] * x[n];
      }
    }
    const auto coef = solve3(ata, aty);
    const double mag = std::hypot(coef[0], coef[1]) / amplitude;
    curve.magnitudes_db.push_back(20.0 * std::log10(std::max(mag, 1e-300)));
  }
  return curve;
}

double BenchReport::time(const std::string& engine, std::size_t block_size) const {
  for (const auto& r : rows) {
    if (r.engine == engine && r.block_size == block_size) return r.compute_time_per_audio_second;
  }
  throw AnalysisError("bench report has no cell for " + engine + " at block size " + std::to_string(block_size));
}

std::vector<std::string> BenchReport::engines() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.engine) == out.end()) out.push_back(r.engine);
  }
  return out;
}

std::vector<std::size_t> BenchReport::block_sizes() const {
  std::set<std::size_t> s;
  for (const auto& r : rows) s.insert(r.block_size);
  return {s.begin(), s.end()};
}

std::string BenchReport::to_table() const {
  const auto engs = engines();
  const bool with_ref = engs == std::vector<std::string>{"traditional", "neural"};
  std::ostringstream out;
  out << "compute time per second of audio (median of " << repetitions << ", " << fmt(duration_s, "%g")
      << " s of audio at " << fmt(fs, "%g") << " Hz)\n";
  char line[256];
  std::string header = "block";
  std::snprintf(line, sizeof line, "%-6s", "block");
  header = line;
  for (const auto& e : engs) {
    std::snprintf(line, sizeof line, " | %12s", e.c_str());
    header += line;
  }
  if (with_ref) {
    std::snprintf(line, sizeof line, " | %10s | %10s", "ref trad.", "ref neural");
    header += line;
  }
  out << header << "\n" << std::string(header.size(), '-') << "\n";
  for (std::size_t b : block_sizes()) {
    std::snprintf(line, sizeof line, "%-6zu", b);
    out << line;
    for (const auto& e : engs) {
      std::snprintf(line, sizeof line, " | %12.7f", time(e, b));
      out << line;
    }
    if (with_ref) {
      const auto it = std::find_if(kBenchReference.begin(), kBenchReference.end(),
                                   [b](const BenchReference& r) { return r.block_size == b; });
      if (it != kBenchReference.end()) {
        std::snprintf(line, sizeof line, " | %10.7f | %10.7f", it->traditional, it->neural);
        out << line;
      }
    }
    out << "\n";
  }
  if (with_ref) out << "ref: reference timings from a 2.9 GHz 2017 laptop (hardware-specific, for comparison only)\n";
  return out.str();
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["duration_s"] = duration_s;
  j["fs"] = fs;
  j["repetitions"] = repetitions;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"block_size", r.block_size},
                         {"engine", r.engine},
                         {"compute_time_per_audio_second", r.compute_time_per_audio_second}});
  }
  j["reference"] = nlohmann::json::array();
  for (const auto& r : kBenchReference) {
    j["reference"].push_back({{"block_size", r.block_size}, {"traditional", r.traditional}, {"neural", r.neural}});
  }
  return j.dump(2);
}

BenchReport BenchReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BenchReport r;
    r.duration_s = j.at("duration_s").get<double>();
    r.fs = j.at("fs").get<double>();
    r.repetitions = j.at("repetitions").get<std::size_t>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("block_size").get<std::size_t>(), row.at("engine").get<std::string>(),
                        row.at("compute_time_per_audio_second").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw AnalysisError(std::string("malformed bench report: ") + e.what());
  }
}

BenchReport benchmark(const EngineProcessorFactory& factory, const std::vector<std::string>& engines,
                      std::span<const std::size_t> block_sizes, double duration_s, double fs,
                      std::size_t repetitions) {
  if (!(duration_s > 0.0) || !(fs > 0.0)) throw AnalysisError("benchmark: duration and fs must be positive");
  if (repetitions == 0) throw AnalysisError("benchmark: need at least one repetition");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  const std::vector<double> noise = white_noise(n, 0.5, 7);
  std::vector<double> buf(n);

  BenchReport report;
  report.duration_s = duration_s;
  report.fs = fs;
  report.repetitions = repetitions;
  using clock = std::chrono::steady_clock;
  for (const auto& engine : engines) {
    for (std::size_t block : block_sizes) {
      if (block == 0) throw AnalysisError("benchmark: block size must be positive");
      const auto pass = [&] {
        Processor p = factory(engine);
        std::copy(noise.begin(), noise.end(), buf.begin());
        const auto t0 = clock::now();
        for (std::size_t i = 0; i < n; i += block) p(std::span(buf).subspan(i, std::min(block, n - i)));
        return std::chrono::duration<double>(clock::now() - t0).count();
      };
      pass();
      std::vector<double> times;
      for (std::size_t r = 0; r < repetitions; ++r) times.push_back(pass());
      // A timer tick coarser than the run would report 0; keep times positive.
      report.rows.push_back({block, engine, std::max(median(times), 1e-12) / duration_s});
    }
  }
  return report;
}

}  // namespace klon::analysis
