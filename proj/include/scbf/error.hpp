#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace scbf {

enum class ErrorKind {
  InvalidParameter,
  ShapeMismatch,
  InvalidInput,
  Diverged,
  NeedsLongerHorizon,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a trajectory produces a non-finite coefficient.
class DivergedError : public Error {
 public:
  DivergedError(std::int64_t step, double time, const std::string& what)
      : Error(ErrorKind::Diverged, what + " (step " + std::to_string(step) + ", t=" +
                                       std::to_string(time) + ")"),
        step_(step),
        time_(time) {}

  std::int64_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }

 private:
  std::int64_t step_;
  double time_;
};

/// Raised by the absorbing-radius quadrature when the supplied noise
/// horizon is too short for the exponential weights to have decayed.
class HorizonError : public Error {
 public:
  HorizonError(double suggested_horizon, const std::string& what)
      : Error(ErrorKind::NeedsLongerHorizon,
              what + " (suggested horizon " + std::to_string(suggested_horizon) + ")"),
        suggested_(suggested_horizon) {}

  double suggested_horizon() const noexcept { return suggested_; }

 private:
  double suggested_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace scbf
