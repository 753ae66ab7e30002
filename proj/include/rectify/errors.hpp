/**
 * @file errors.hpp
 * @brief Exception types shared by every module of the library.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rectify {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is the 0-based byte offset of the offending token.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error("syntax error at position " + std::to_string(position) + ": " + message), position_(position) {}

  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A spatial variable index outside the declared dimension, or mismatched vector lengths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Domain violation or non-finite value during expression evaluation.
class EvalError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Common base for the two ways a trajectory can fail to reach its target time.
class TrajectoryError : public Error {
 public:
  TrajectoryError(const std::string& message, double event_time) : Error(message), event_time_(event_time) {}

  [[nodiscard]] double event_time() const noexcept { return event_time_; }

 private:
  double event_time_;
};

class TrajectoryEscaped : public TrajectoryError {
 public:
  explicit TrajectoryEscaped(double t)
      : TrajectoryError("trajectory left the domain at t = " + std::to_string(t), t) {}
};

/// Raised for norm blow-up and for step-size underflow alike.
class TrajectoryBlowUp : public TrajectoryError {
 public:
  explicit TrajectoryBlowUp(double t) : TrajectoryError("trajectory blew up at t = " + std::to_string(t), t) {}
};

/// The smoke probe run while building a rectification did not survive.
class ProbeFailed : public Error {
 public:
  using Error::Error;
};

class MissingInverse : public Error {
 public:
  using Error::Error;
};

/// A map offered for conjugation is not of the form (t, x) -> (f(t, x), g(x)).
class NotTrivialForm : public Error {
 public:
  using Error::Error;
};

}  // namespace rectify
