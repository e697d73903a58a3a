#pragma once

#include <stdexcept>
#include <string>

namespace klon {

// Base for every error raised by the library. Subclasses map one-to-one onto
// CLI exit codes and HTTP statuses (see app/commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingComponentError : public ConfigError {
 public:
  explicit MissingComponentError(const std::string& name)
      : ConfigError("missing component '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class DegeneratePrototypeError : public Error {
 public:
  using Error::Error;
};

class WdfError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class WeightsError : public Error {
 public:
  using Error::Error;
};

class BankIncompleteError : public WeightsError {
 public:
  using WeightsError::WeightsError;
};

class DimensionError : public WeightsError {
 public:
  DimensionError(const std::string& matrix, const std::string& detail)
      : WeightsError("dimension mismatch in " + matrix + ": " + detail), matrix_(matrix) {}
  const std::string& matrix() const { return matrix_; }

 private:
  std::string matrix_;
};

class NonFiniteError : public WeightsError {
 public:
  using WeightsError::WeightsError;
};

// A control value outside [0, 1] or an unknown engine name.
class ParamError : public Error {
 public:
  using Error::Error;
};

class SampleRateError : public Error {
 public:
  using Error::Error;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class WavError : public Error {
 public:
  using Error::Error;
};

class UnsupportedEncodingError : public WavError {
 public:
  using WavError::WavError;
};

}  // namespace klon
