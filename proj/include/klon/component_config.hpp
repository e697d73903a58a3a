#pragma once

#include <map>
#include <string>
#include <string_view>

namespace klon {

// Named component values (ohms, farads, amperes, volts, or dimensionless)
// for the whole pedal. Parsed from flat "name = value" text; values accept an
// SI suffix (p, n, u, m, k, M), e.g. "C14 = 3.9n".
class ComponentConfig {
 public:
  ComponentConfig() = default;

  static ComponentConfig parse(std::string_view text);
  static ComponentConfig load(const std::string& path);

  // The canonical Centaur values shipped in config/centaur.cfg.
  static const ComponentConfig& centaur();
  static std::string_view centaur_text();

  // Throws MissingComponentError if absent, ConfigError if not strictly positive.
  double get(const std::string& name) const;
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  void set(const std::string& name, double value) { values_[name] = value; }

  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

// Parses "4.7k", "3.9n", "1e-6", "100". Throws ConfigError on malformed input.
double parse_si_value(std::string_view text);

}  // namespace klon
