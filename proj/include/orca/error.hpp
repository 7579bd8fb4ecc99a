#pragma once

#include <stdexcept>
#include <string>

namespace orca {

enum class ErrorKind {
  config,
  domain,
  numerical,
  calibration,
  range,
  fit,
  analysis,
  optimization,
};

/// Base of every error raised by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

struct CalibrationError : Error {
  CalibrationError(const std::string& w, double lo, double hi)
      : Error(ErrorKind::calibration, w), achievable_min(lo), achievable_max(hi) {}
  double achievable_min;
  double achievable_max;
};

struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error(ErrorKind::range, w) {}
};

struct FitError : Error {
  explicit FitError(const std::string& w) : Error(ErrorKind::fit, w) {}
};

struct AnalysisError : Error {
  explicit AnalysisError(const std::string& w) : Error(ErrorKind::analysis, w) {}
};

struct OptimizationError : Error {
  explicit OptimizationError(const std::string& w) : Error(ErrorKind::optimization, w) {}
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::domain: return "domain";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::calibration: return "calibration";
    case ErrorKind::range: return "range";
    case ErrorKind::fit: return "fit";
    case ErrorKind::analysis: return "analysis";
    case ErrorKind::optimization: return "optimization";
  }
  return "unknown";
}

}  // namespace orca
