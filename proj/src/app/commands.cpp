#include "app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

namespace klon::app {
namespace {

std::string num(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error("cannot write '" + path + "'");
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParamError*>(&e)) return kExitUsage;
  if (dynamic_cast<const UnsupportedEncodingError*>(&e)) return kExitEncoding;
  if (dynamic_cast<const WavError*>(&e)) return kExitUnreadable;
  if (dynamic_cast<const SampleRateError*>(&e)) return kExitSampleRate;
  if (dynamic_cast<const WeightsError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const DegeneratePrototypeError*>(&e)) {
    return kExitBadData;
  }
  if (dynamic_cast<const PortInUseError*>(&e)) return kExitPortInUse;
  return kExitFailure;
}

int http_status_for(const std::exception& e) {
  if (dynamic_cast<const ParamError*>(&e)) return 422;
  if (dynamic_cast<const SampleRateError*>(&e)) return 409;
  if (dynamic_cast<const UnsupportedEncodingError*>(&e)) return 415;
  if (dynamic_cast<const WavError*>(&e)) return 400;
  return 500;
}

Resources load_resources(const std::optional<std::string>& config_path, const std::optional<std::string>& weights_path) {
  Resources r;
  if (config_path) r.config = ComponentConfig::load(*config_path);
  if (weights_path) r.bank = rnn::load_weights_auto(*weights_path);
  return r;
}

std::vector<double> render(const Resources& res, double fs, const PedalParams& params, std::span<const double> in) {
  Pedal pedal(res.config, fs, res.bank);
  std::vector<double> out(in.begin(), in.end());
  for (std::size_t i = 0; i < out.size(); i += kRenderBlock) {
    pedal.process_block(params, std::span(out).subspan(i, std::min(kRenderBlock, out.size() - i)));
  }
  // Catches a bad request on empty input too.
  if (out.empty()) pedal.process_block(params, {});
  return out;
}

ProcessResult process_audio(const Resources& res, const wav::Audio& in, const PedalParams& params) {
  const auto y = render(res, in.spec.sample_rate, params, in.samples);
  ProcessResult r;
  for (double s : y) r.peak = std::max(r.peak, std::abs(s));
  r.clipped = wav::count_clipped(y);
  r.bytes = wav::encode(y, in.spec.sample_rate, in.spec.encoding);
  return r;
}

std::vector<std::uint8_t> render_wav(const Resources& res, const wav::Audio& in, const PedalParams& params) {
  return process_audio(res, in, params).bytes;
}

ResponseTable response_table(const Resources& res, const ResponseOptions& opt) {
  ResponseTable t;
  t.frequencies_hz = opt.frequencies;
  const auto tone = linear::ToneComponents::from_config(res.config);
  for (double treble : opt.trebles) {
    if (!(treble >= 0.0 && treble <= 1.0)) throw ParamError("treble must be in [0, 1], got " + num(treble));
    analysis::ProcessorFactory factory;
    if (opt.chain) {
      PedalParams p = opt.params;
      p.treble = treble;
      factory = [&res, &opt, p] {
        auto pedal = std::make_shared<Pedal>(res.config, opt.fs, res.bank);
        return [pedal, p](std::span<double> x) { pedal->process_block(p, x); };
      };
    } else {
      const auto c = linear::stage_coeffs(linear::make_stage_config(res.config, linear::StageId::tone, treble), opt.fs);
      factory = [c] {
        auto f = std::make_shared<linear::FirstOrderFilter>(c);
        return [f](std::span<double> x) { f->process(x); };
      };
    }
    t.digital_db.push_back(analysis::freq_response(factory, opt.frequencies, opt.fs).magnitudes_db);

    const auto proto = linear::tone_analog_prototype(tone, treble);
    std::vector<double> analog;
    for (double f : opt.frequencies) analog.push_back(20.0 * std::log10(std::abs(linear::analog_response(proto, f))));
    t.analog_db.push_back(std::move(analog));
  }
  return t;
}

std::string response_csv(const ResponseTable& table, const std::vector<double>& trebles) {
  std::string out = "freq_hz";
  for (double tr : trebles) out += ",digital_treble_" + num(tr, "%g");
  for (double tr : trebles) out += ",analog_treble_" + num(tr, "%g");
  out += "\n";
  for (std::size_t i = 0; i < table.frequencies_hz.size(); ++i) {
    out += num(table.frequencies_hz[i], "%.6f");
    for (const auto& col : table.digital_db) out += "," + num(col[i], "%.6f");
    for (const auto& col : table.analog_db) out += "," + num(col[i], "%.6f");
    out += "\n";
  }
  return out;
}

analysis::BenchReport run_bench(const Resources& res, double duration_s, std::span<const std::size_t> block_sizes,
                                std::size_t repetitions) {
  const double fs = kNeuralSampleRate;
  const auto factory = [&res, fs](const std::string& engine) -> analysis::Processor {
    PedalParams p;
    p.engine = parse_engine(engine);
    auto pedal = std::make_shared<Pedal>(res.config, fs, res.bank);
    return [pedal, p](std::span<double> x) { pedal->process_block(p, x); };
  };
  return analysis::benchmark(factory, {"traditional", "neural"}, block_sizes, duration_s, fs, repetitions);
}

int cmd_process(const Resources& res, const ProcessArgs& args, std::ostream& out, std::ostream& err) {
  args.params.validate();
  const auto in = wav::read_file(args.in_path);
  const auto r = process_audio(res, in, args.params);
  {
    std::ofstream f(args.out_path, std::ios::binary);
    if (!f) throw Error("cannot write '" + args.out_path + "'");
    f.write(reinterpret_cast<const char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
    if (!f) throw Error("write failed for '" + args.out_path + "'");
  }
  out << "wrote " << args.out_path << ": " << in.samples.size() << " samples at " << in.spec.sample_rate << " Hz, engine "
      << to_string(args.params.engine) << "\n";
  out << "peak " << num(r.peak, "%.6f") << " (" << (r.peak > 0.0 ? num(20.0 * std::log10(r.peak), "%.2f") : "-inf")
      << " dBFS)\n";
  if (r.clipped > 0) {
    err << "warning: " << r.clipped << " samples exceed full scale"
        << (in.spec.encoding == wav::Encoding::pcm16 ? " and were clipped" : "") << "; lower --level\n";
  }
  return kExitOk;
}

int cmd_response(const Resources& res, const ResponseOptions& opt, const std::string& out_path, std::ostream& out,
                 std::ostream&) {
  const auto csv = response_csv(response_table(res, opt), opt.trebles);
  if (out_path.empty() || out_path == "-") {
    out << csv;
  } else {
    write_text(out_path, csv);
    out << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_bench(const Resources& res, double duration_s, const std::string& out_path, std::ostream& out, std::ostream&) {
  const auto report = run_bench(res, duration_s, analysis::kBenchBlockSizes);
  out << report.to_table();
  if (!out_path.empty()) {
    write_text(out_path, report.to_json() + "\n");
    out << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_esr(const std::string& reference_path, const std::string& estimate_path, std::ostream& out, std::ostream&) {
  const auto y = wav::read_file(reference_path);
  const auto yhat = wav::read_file(estimate_path);
  const auto r = analysis::esr(y.samples, yhat.samples);
  out << "esr " << num(r.esr, "%.9g") << " over " << r.n << " samples\n";
  return kExitOk;
}

}  // namespace klon::app
