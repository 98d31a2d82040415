#pragma once

#include <stdexcept>
#include <string>

namespace gyro {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid physical parameters or configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step fell below the floor (stiffness or blow-up).
class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

/// A state entry became NaN or infinite.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// The mixed-state QFI system matrix is too singular; use the pure formula.
class NearPureState : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

/// Fock-space population reached the top truncation level.
class TruncationLeak : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace gyro
