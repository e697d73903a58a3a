#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "app/commands.hpp"
#include "klon/analysis.hpp"
#include "klon/wav.hpp"

using namespace klon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path tmp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("klon_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tmp(const std::string& name) { return (tmp_dir() / name).string(); }

Run cli(const std::string& args) {
  const std::string log = tmp("log.txt");
  const std::string cmd = std::string(KLON_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(log);
  std::stringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string data(const std::string& name) { return std::string(KLON_SOURCE_DIR) + "/tests/data/" + name; }

}  // namespace

TEST_CASE("process") {
  SUBCASE("silence in, silence out") {
    wav::write_file(tmp("silence.wav"), std::vector<double>(44100, 0.0), 44100, wav::Encoding::float32);
    for (const char* engine : {"traditional", "neural"}) {
      const auto r = cli("process " + tmp("silence.wav") + " " + tmp("silence_out.wav") + " --engine " + engine);
      REQUIRE(r.code == 0);
      const auto y = wav::read_file(tmp("silence_out.wav"));
      CHECK(y.samples.size() == 44100);
      for (double v : y.samples) REQUIRE(std::abs(v) < 1e-5);
    }
  }
  SUBCASE("repeat runs are byte-identical") {
    const std::string args = " --gain 0.8 --treble 0.2 --level 0.7";
    REQUIRE(cli("process " + data("guitar_5s.wav") + " " + tmp("a.wav") + args).code == 0);
    REQUIRE(cli("process " + data("guitar_5s.wav") + " " + tmp("b.wav") + args).code == 0);
    CHECK(slurp(tmp("a.wav")) == slurp(tmp("b.wav")));
    CHECK(slurp(tmp("a.wav")).size() > 44);
  }
  SUBCASE("golden regression files") {
    for (const std::string engine : {"traditional", "neural"}) {
      CAPTURE(engine);
      const auto r = cli("process " + data("guitar_5s.wav") + " " + tmp("g.wav") + " --engine " + engine + " --gain 0.5");
      REQUIRE(r.code == 0);
      CHECK(r.out.find("peak") != std::string::npos);
      const auto got = wav::read_file(tmp("g.wav"));
      const auto want = wav::read_file(data("golden_" + engine + ".wav"));
      CHECK(analysis::esr(want.samples, got.samples).esr < 1e-9);
    }
  }
  SUBCASE("output mirrors the input's rate and encoding; stereo is averaged") {
    const auto x = analysis::guitar_like_signal(48000.0, 0.5, 4);
    // Stereo 16-bit file built by interleaving x with itself.
    std::vector<double> both;
    for (double v : x) both.insert(both.end(), {v, v});
    auto bytes = wav::encode(both, 48000, wav::Encoding::pcm16);
    bytes[22] = 2;                           // channels
    const std::uint32_t rate = 48000, byte_rate = 48000 * 4;
    std::memcpy(&bytes[24], &rate, 4);
    std::memcpy(&bytes[28], &byte_rate, 4);
    bytes[32] = 4;                           // block align
    std::ofstream(tmp("stereo.wav"), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const auto in = wav::read_file(tmp("stereo.wav"));
    REQUIRE(in.spec.channels == 2);
    REQUIRE(in.samples.size() == x.size());

    REQUIRE(cli("process " + tmp("stereo.wav") + " " + tmp("stereo_out.wav")).code == 0);
    const auto out = wav::read_file(tmp("stereo_out.wav"));
    CHECK(out.spec.sample_rate == 48000);
    CHECK(out.spec.channels == 1);
    CHECK(out.spec.encoding == wav::Encoding::pcm16);
    CHECK(out.samples.size() == x.size());
  }
  SUBCASE("clip warning") {
    const auto r = cli("process " + data("guitar_5s.wav") + " " + tmp("loud.wav") + " --gain 1 --level 1");
    CHECK(r.code == 0);
    CHECK(r.out.find("warning") != std::string::npos);
  }
}

TEST_CASE("exit codes") {
  const std::string in = data("guitar_5s.wav");
  SUBCASE("usage and parameters: 2") {
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --gain 2").code == app::kExitUsage);
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --level -0.1").code == app::kExitUsage);
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --engine ml").code == app::kExitUsage);
    CHECK(cli("process " + in).code == app::kExitUsage);
    CHECK(cli("frobnicate").code == app::kExitUsage);
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --bogus").code == app::kExitUsage);
  }
  SUBCASE("help and version: 0") {
    const auto r = cli("--help");
    CHECK(r.code == 0);
    CHECK(r.out.find("Exit codes") != std::string::npos);
    CHECK(cli("process --help").out.find("averaged to mono") != std::string::npos);
    CHECK(cli("--version").code == 0);
  }
  SUBCASE("unreadable: 3") {
    CHECK(cli("process /nonexistent.wav " + tmp("x.wav")).code == app::kExitUnreadable);
    std::ofstream(tmp("junk.wav")) << "this is not audio";
    CHECK(cli("process " + tmp("junk.wav") + " " + tmp("x.wav")).code == app::kExitUnreadable);
  }
  SUBCASE("unsupported encoding: 4") {
    auto bytes = wav::encode(std::vector<double>(100, 0.0), 44100, wav::Encoding::pcm16);
    bytes[34] = 24;  // bits per sample
    std::ofstream(tmp("b24.wav"), std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    CHECK(cli("process " + tmp("b24.wav") + " " + tmp("x.wav")).code == app::kExitEncoding);
  }
  SUBCASE("neural at 48 kHz: 5") {
    wav::write_file(tmp("r48.wav"), std::vector<double>(4800, 0.1), 48000, wav::Encoding::float32);
    const auto r = cli("process " + tmp("r48.wav") + " " + tmp("x.wav") + " --engine neural");
    CHECK(r.code == app::kExitSampleRate);
    CHECK(r.out.find("44100") != std::string::npos);
    CHECK(cli("process " + tmp("r48.wav") + " " + tmp("x.wav") + " --engine traditional").code == 0);
  }
  SUBCASE("weights and config: 6") {
    std::ofstream(tmp("w.json")) << "[{\"gain\": 0.0}]";
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --weights " + tmp("w.json")).code == app::kExitBadData);
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --weights /nonexistent.json").code == app::kExitBadData);
    std::ofstream(tmp("c.cfg")) << "R1 = banana\n";
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --config " + tmp("c.cfg")).code == app::kExitBadData);
    CHECK(cli("process " + in + " " + tmp("x.wav") + " --weights " + std::string(KLON_SOURCE_DIR) +
               "/data/demo_weights.json").code == 0);
  }
  SUBCASE("port in use: 7") {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    REQUIRE(::listen(fd, 1) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    const int port = ntohs(addr.sin_port);
    CHECK(cli("serve --port " + std::to_string(port)).code == app::kExitPortInUse);
    ::close(fd);
  }
}

TEST_CASE("response") {
  const auto r = cli("response -o " + tmp("resp.csv"));
  REQUIRE(r.code == 0);
  std::ifstream f(tmp("resp.csv"));
  std::string header;
  std::getline(f, header);
  CHECK(header ==
        "freq_hz,digital_treble_0,digital_treble_0.5,digital_treble_1,analog_treble_0,analog_treble_0.5,analog_treble_1");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(f, line)) {
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 7);
    for (double x : v) REQUIRE(std::isfinite(x));
    if (v[0] < 10000.0) {
      for (int k = 0; k < 3; ++k) CHECK(std::abs(v[1 + k] - v[4 + k]) < 1.0);
    }
    ++rows;
  }
  CHECK(rows == 61);

  const auto chain = cli("response --chain --engine neural --trebles 0.25");
  REQUIRE(chain.code == 0);
  CHECK(chain.out.rfind("freq_hz,digital_treble_0.25,analog_treble_0.25\n", 0) == 0);
  CHECK(cli("response --trebles 1.5").code == app::kExitUsage);
}

TEST_CASE("bench") {
  const auto r = cli("bench --duration 0.05 -o " + tmp("bench.json"));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(tmp("bench.json")));
  REQUIRE(j["rows"].size() == 20);
  // Every JSON value appears in the table at the printed precision.
  for (const auto& row : j["rows"]) {
    char cell[32];
    std::snprintf(cell, sizeof cell, "%.7f", row["compute_time_per_audio_second"].get<double>());
    CHECK(r.out.find(cell) != std::string::npos);
  }
  for (std::size_t b : analysis::kBenchBlockSizes) CHECK(r.out.find("\n" + std::to_string(b) + " ") != std::string::npos);
}

TEST_CASE("esr subcommand") {
  const auto r = cli("esr " + data("golden_traditional.wav") + " " + data("golden_traditional.wav"));
  CHECK(r.code == 0);
  CHECK(r.out.find("esr 0 ") != std::string::npos);
  CHECK(cli("esr " + data("golden_traditional.wav") + " " + data("golden_neural.wav")).code == 0);
}
