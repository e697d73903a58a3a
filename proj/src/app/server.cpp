#include "app/server.hpp"

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <vector>
#include <sys/socket.h>

#include <httplib.h>
#include <json.hpp>

#include "klon/simd/kernels.hpp"

namespace klon::app {
namespace {

using nlohmann::json;

// 400: the request itself is malformed (not a parameter value problem).
class BadRequest : public Error {
 public:
  using Error::Error;
};

// 404
class NotFound : public Error {
 public:
  using Error::Error;
};

json params_json(const PedalParams& p) {
  return {{"gain", p.gain}, {"treble", p.treble}, {"level", p.level}, {"engine", std::string(to_string(p.engine))}};
}

double control_value(const json& j, const char* name) {
  if (!j.is_number()) throw ParamError(std::string(name) + " must be a number");
  return j.get<double>();
}

double query_number(const httplib::Request& req, const char* name, double fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string s = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParamError(std::string(name) + " must be a number, got '" + s + "'");
  }
}

const char* kind_of(const std::exception& e) {
  if (dynamic_cast<const ParamError*>(&e)) return "param";
  if (dynamic_cast<const SampleRateError*>(&e)) return "sample_rate";
  if (dynamic_cast<const UnsupportedEncodingError*>(&e)) return "unsupported_encoding";
  if (dynamic_cast<const WavError*>(&e)) return "wav";
  if (dynamic_cast<const BadRequest*>(&e)) return "bad_request";
  if (dynamic_cast<const NotFound*>(&e)) return "not_found";
  return "internal";
}

constexpr std::size_t kMaxResults = 64;

}  // namespace

struct Server::Impl {
  Resources res;
  ServerOptions opt;
  httplib::Server http;
  int bound_port = -1;

  // Session state; every request that reads or changes it holds `mu`.
  std::mutex mu;
  PedalParams params;
  struct Clip {
    std::size_t id = 0;
    std::uint32_t sample_rate = 0;
    std::size_t samples = 0;
  };
  std::optional<Clip> clip;
  struct CacheEntry {
    std::size_t clip;
    PedalParams params;
    std::string id;
  };
  std::vector<CacheEntry> cache;
  std::map<std::string, std::vector<std::uint8_t>> results;
  std::deque<std::string> result_order;
  std::uint64_t next_job = 1;
  std::mutex bench_mu;

  Impl(Resources r, ServerOptions o) : res(std::move(r)), opt(std::move(o)) { routes(); }

  using Handler = std::function<json(const httplib::Request&, httplib::Response&)>;

  // Wraps a handler: JSON body on success, JSON error with the mapped status.
  httplib::Server::Handler wrap(Handler h) {
    return [h](const httplib::Request& req, httplib::Response& res) {
      try {
        json body = h(req, res);
        if (!body.is_null()) res.set_content(body.dump(), "application/json");
      } catch (const std::exception& e) {
        int status = http_status_for(e);
        if (dynamic_cast<const BadRequest*>(&e)) status = 400;
        if (dynamic_cast<const NotFound*>(&e)) status = 404;
        res.status = status;
        res.set_content(json{{"error", e.what()}, {"kind", kind_of(e)}}.dump(), "application/json");
      }
    };
  }

  // Renders for other knob settings are dropped; both engines' renders for
  // the current settings stay.
  void drop_stale_cache() {
    std::erase_if(cache, [this](const CacheEntry& e) {
      return e.params.gain != params.gain || e.params.treble != params.treble || e.params.level != params.level;
    });
  }

  json update_params(const json& body) {
    if (!body.is_object()) throw BadRequest("expected a JSON object");
    PedalParams p = params;
    for (const auto& [key, value] : body.items()) {
      if (key == "gain") p.gain = control_value(value, "gain");
      else if (key == "treble") p.treble = control_value(value, "treble");
      else if (key == "level") p.level = control_value(value, "level");
      else if (key == "engine") {
        if (!value.is_string()) throw ParamError("engine must be a string");
        p.engine = parse_engine(value.get<std::string>());
      } else {
        throw ParamError("unknown parameter '" + key + "'");
      }
    }
    p.validate();
    if (!(p == params)) {
      params = p;
      drop_stale_cache();
    }
    return params_json(params);
  }

  json process(const httplib::Request& req) {
    std::string body;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("file")) throw BadRequest("multipart upload needs a 'file' field");
      body = req.get_file_value("file").content;
    } else {
      body = req.body;
    }
    if (body.empty()) throw BadRequest("no audio uploaded");
    const std::vector<std::uint8_t> bytes(body.begin(), body.end());
    const auto audio = wav::decode(bytes);
    const std::size_t clip_id = std::hash<std::string>{}(body) ^ body.size();

    std::lock_guard lock(mu);
    clip = Clip{clip_id, audio.spec.sample_rate, audio.samples.size()};
    json out = {{"sample_rate", audio.spec.sample_rate},
                {"samples", audio.samples.size()},
                {"params", params_json(params)},
                {"neural_available", audio.spec.sample_rate == kNeuralSampleRate}};
    for (const auto& e : cache) {
      if (e.clip == clip_id && e.params == params && results.count(e.id)) {
        out["id"] = e.id;
        out["cached"] = true;
        return out;
      }
    }
    const auto r = process_audio(res, audio, params);
    const std::string id = "job-" + std::to_string(next_job++);
    results[id] = r.bytes;
    result_order.push_back(id);
    while (result_order.size() > kMaxResults) {
      results.erase(result_order.front());
      result_order.pop_front();
    }
    cache.push_back({clip_id, params, id});
    out["id"] = id;
    out["cached"] = false;
    out["peak"] = r.peak;
    out["clipped"] = r.clipped;
    return out;
  }

  json response(const httplib::Request& req) {
    PedalParams p;
    {
      std::lock_guard lock(mu);
      p = params;
    }
    p.treble = query_number(req, "treble", p.treble);
    if (req.has_param("engine")) p.engine = parse_engine(req.get_param_value("engine"));
    p.validate();
    ResponseOptions o;
    o.trebles = {p.treble};
    o.params = p;
    o.frequencies = analysis::log_frequencies(20.0, 20000.0, 41);
    o.chain = true;
    const auto chain = response_table(res, o);
    o.chain = false;
    const auto tone = response_table(res, o);
    return {{"treble", p.treble},
            {"engine", std::string(to_string(p.engine))},
            {"fs", o.fs},
            {"frequencies_hz", chain.frequencies_hz},
            {"magnitudes_db", chain.digital_db[0]},
            {"tone_digital_db", tone.digital_db[0]},
            {"tone_analog_db", tone.analog_db[0]}};
  }

  json bench(const httplib::Request& req) {
    const double duration = query_number(req, "duration", opt.bench_duration_s);
    const double reps = query_number(req, "repetitions", 5);
    if (!(duration > 0.0 && duration <= 60.0)) throw ParamError("duration must be in (0, 60] seconds");
    if (!(reps >= 1 && reps <= 20)) throw ParamError("repetitions must be in [1, 20]");
    std::lock_guard lock(bench_mu);
    const auto report = run_bench(res, duration, analysis::kBenchBlockSizes, static_cast<std::size_t>(reps));
    return json::parse(report.to_json());
  }

  json meta() {
    std::lock_guard lock(mu);
    json j = {{"version", kVersion},
              {"fs", kNeuralSampleRate},
              {"engines", {{"traditional", true}, {"neural", true}}},
              {"neural_sample_rate", kNeuralSampleRate},
              {"simd", std::string(simd::to_string(simd::active_isa()))},
              {"defaults", params_json(PedalParams{})},
              {"params", params_json(params)},
              {"block_sizes", analysis::kBenchBlockSizes}};
    if (clip) {
      j["clip"] = {{"sample_rate", clip->sample_rate},
                   {"samples", clip->samples},
                   {"neural_available", clip->sample_rate == kNeuralSampleRate}};
    } else {
      j["clip"] = nullptr;
    }
    return j;
  }

  void routes() {
    http.Get("/api/params", wrap([this](const auto&, auto&) {
      std::lock_guard lock(mu);
      return params_json(params);
    }));
    http.Post("/api/params", wrap([this](const httplib::Request& req, auto&) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        throw BadRequest(std::string("malformed JSON: ") + e.what());
      }
      std::lock_guard lock(mu);
      return update_params(body);
    }));
    http.Post("/api/process", wrap([this](const httplib::Request& req, auto&) { return process(req); }));
    http.Get(R"(/api/result/([A-Za-z0-9\-]+))", wrap([this](const httplib::Request& req, httplib::Response& out) {
      std::lock_guard lock(mu);
      const auto it = results.find(req.matches[1].str());
      if (it == results.end()) throw NotFound("no result with id '" + req.matches[1].str() + "'");
      out.set_content(std::string(it->second.begin(), it->second.end()), "audio/wav");
      return json();
    }));
    http.Get("/api/response", wrap([this](const httplib::Request& req, auto&) { return response(req); }));
    http.Get("/api/bench", wrap([this](const httplib::Request& req, auto&) { return bench(req); }));
    http.Get("/api/meta", wrap([this](const auto&, auto&) { return meta(); }));
    if (opt.static_dir) http.set_mount_point("/", *opt.static_dir);
    // The library default adds SO_REUSEPORT, which would let a second server
    // share a port that is already in use.
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
  }
};

Server::Server(Resources res, ServerOptions opt) : impl_(std::make_unique<Impl>(std::move(res), std::move(opt))) {}
Server::~Server() { stop(); }

int Server::bind() {
  auto& s = *impl_;
  if (s.opt.port == 0) {
    s.bound_port = s.http.bind_to_any_port(s.opt.host);
    if (s.bound_port < 0) throw PortInUseError("cannot bind any port on " + s.opt.host);
  } else {
    if (!s.http.bind_to_port(s.opt.host, s.opt.port)) {
      throw PortInUseError("port " + std::to_string(s.opt.port) + " on " + s.opt.host + " is in use");
    }
    s.bound_port = s.opt.port;
  }
  return s.bound_port;
}

void Server::run() { impl_->http.listen_after_bind(); }
void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }
void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}
int Server::port() const { return impl_->bound_port; }

}  // namespace klon::app
