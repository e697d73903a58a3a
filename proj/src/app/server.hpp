#pragma once

// Local HTTP service backing the browser control surface.
//
//   GET  /api/params              current PedalParams
//   POST /api/params              partial JSON update; 422 on invalid values
//   POST /api/process             WAV upload (multipart field "file", or a raw
//                                 audio/wav body) -> {"id", ...}
//   GET  /api/result/{id}         processed WAV bytes; 404 if unknown
//   GET  /api/response?treble=F&engine=E
//                                 response curves of the pedal and tone stage
//   GET  /api/bench?duration=S    BenchReport JSON
//   GET  /api/meta                version, sample rate, engine availability
//
// Errors are JSON {"error": message, "kind": class}. Statuses: 400 malformed
// request or WAV, 404 unknown job, 409 neural engine at a rate other than
// 44100 Hz, 415 unsupported WAV encoding, 422 invalid parameter, 500 other.

#include <memory>
#include <optional>
#include <string>

#include "app/commands.hpp"

namespace klon::app {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  std::optional<std::string> static_dir;
  double bench_duration_s = 5.0;
};

class Server {
 public:
  Server(Resources res, ServerOptions opt);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Throws PortInUseError if the port cannot be bound. Returns the port.
  int bind();
  // Serves until stop(). Call bind() first.
  void run();
  // Blocks until run() is accepting connections.
  void wait_until_ready() const;
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace klon::app
