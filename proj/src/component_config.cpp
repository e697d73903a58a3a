#include "klon/component_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "centaur_cfg.hpp"
#include "klon/error.hpp"

namespace klon {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double suffix_scale(char c) {
  switch (c) {
    case 'p': return 1e-12;
    case 'n': return 1e-9;
    case 'u': return 1e-6;
    case 'm': return 1e-3;
    case 'k': case 'K': return 1e3;
    case 'M': return 1e6;
    default: return 0.0;
  }
}

}  // namespace

double parse_si_value(std::string_view text) {
  text = trim(text);
  if (text.empty()) throw ConfigError("empty value");
  double scale = 1.0;
  if (const double s = suffix_scale(text.back()); s != 0.0) {
    scale = s;
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError("malformed value '" + std::string(text) + "'");
  }
  return value * scale;
}

ComponentConfig ComponentConfig::parse(std::string_view text) {
  ComponentConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'name = value'");
    }
    const auto name = trim(line.substr(0, eq));
    if (name.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty name");
    try {
      cfg.values_[std::string(name)] = parse_si_value(line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ComponentConfig ComponentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string_view ComponentConfig::centaur_text() { return detail::kCentaurConfigText; }

const ComponentConfig& ComponentConfig::centaur() {
  static const ComponentConfig cfg = parse(centaur_text());
  return cfg;
}

double ComponentConfig::get(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw MissingComponentError(name);
  if (!(it->second > 0.0)) throw ConfigError("component '" + name + "' must be positive");
  return it->second;
}

}  // namespace klon
