// klon: process WAV files through the pedal model, print response and
// benchmark reports, or serve the HTTP API for the control surface.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "app/commands.hpp"
#include "app/server.hpp"

namespace {

klon::app::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace klon;
  CLI::App cli{"Klon Centaur pedal model: circuit (traditional) and GRU (neural) engines"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", app::kVersion);
  cli.footer(
      "Exit codes: 0 ok, 1 other failure, 2 usage or parameter out of range, 3 unreadable input,\n"
      "4 unsupported WAV encoding, 5 neural engine at a rate other than 44100 Hz,\n"
      "6 weight file or component config rejected, 7 port in use.");

  std::optional<std::string> config_path, weights_path;
  std::string engine = "traditional";
  PedalParams params;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "component values file (default: built-in Centaur values)");
    sub->add_option("--weights", weights_path, "neural model bank JSON (default: built-in demonstration weights)");
  };
  const auto add_controls = [&](CLI::App* sub) {
    sub->add_option("--engine", engine, "traditional or neural")->capture_default_str();
    sub->add_option("--gain", params.gain, "gain control in [0, 1]")->capture_default_str();
    sub->add_option("--treble", params.treble, "treble control in [0, 1]")->capture_default_str();
    sub->add_option("--level", params.level, "level control in [0, 1]")->capture_default_str();
  };

  app::ProcessArgs proc;
  auto* process = cli.add_subcommand("process", "process a WAV file (stereo input is averaged to mono)");
  process->add_option("input", proc.in_path, "16-bit PCM or 32-bit float WAV")->required();
  process->add_option("output", proc.out_path, "written mono, same rate and encoding as the input")->required();
  add_controls(process);
  add_common(process);

  app::ResponseOptions resp;
  std::string resp_out;
  auto* response = cli.add_subcommand("response", "frequency response CSV over a treble grid");
  response->add_option("--trebles", resp.trebles, "treble values")->delimiter(',')->capture_default_str();
  response->add_flag("--chain", resp.chain, "probe the whole pedal instead of the tone stage alone");
  response->add_option("--out,-o", resp_out, "CSV path (default: stdout)");
  add_controls(response);
  add_common(response);

  double bench_duration = 5.0;
  std::string bench_out;
  auto* bench = cli.add_subcommand("bench", "compute time per second of audio, both engines, block sizes 8 to 4096");
  bench->add_option("--duration", bench_duration, "seconds of audio per measurement")->capture_default_str();
  bench->add_option("--out,-o", bench_out, "also write the report as JSON");
  add_common(bench);

  std::string esr_ref, esr_est;
  auto* esr = cli.add_subcommand("esr", "error-to-signal ratio of two WAV files");
  esr->add_option("reference", esr_ref)->required();
  esr->add_option("estimate", esr_est)->required();

  app::ServerOptions serve_opt;
  auto* serve = cli.add_subcommand("serve", "serve the HTTP API on localhost");
  serve->add_option("--port", serve_opt.port, "TCP port")->capture_default_str();
  serve->add_option("--host", serve_opt.host, "bind address")->capture_default_str();
  serve->add_option("--static", serve_opt.static_dir, "directory of UI assets to serve at /");
  add_common(serve);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kExitOk : app::kExitUsage;
  }

  try {
    if (*esr) return app::cmd_esr(esr_ref, esr_est, std::cout, std::cerr);

    params.engine = parse_engine(engine);
    params.validate();
    const auto res = app::load_resources(config_path, weights_path);

    if (*process) {
      proc.params = params;
      return app::cmd_process(res, proc, std::cout, std::cerr);
    }
    if (*response) {
      resp.params = params;
      return app::cmd_response(res, resp, resp_out, std::cout, std::cerr);
    }
    if (*bench) {
      if (!(bench_duration > 0.0)) throw ParamError("--duration must be positive");
      return app::cmd_bench(res, bench_duration, bench_out, std::cout, std::cerr);
    }
    app::Server server(res, serve_opt);
    const int port = server.bind();
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "serving on http://" << serve_opt.host << ":" << port << "/" << std::endl;
    server.run();
    g_server = nullptr;
    return app::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return app::exit_code_for(e);
  }
}
