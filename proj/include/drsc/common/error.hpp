#pragma once

#include <stdexcept>
#include <string>

namespace drsc {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input/output dimensions do not chain.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Upstream artifact problems (CLI exit code 3).
class ArtifactError : public Error {
 public:
  using Error::Error;
};

class MissingArtifact : public ArtifactError {
 public:
  explicit MissingArtifact(const std::string& path)
      : ArtifactError("missing artifact: " + path) {}
};

class StaleArtifact : public ArtifactError {
 public:
  explicit StaleArtifact(const std::string& path)
      : ArtifactError("stale artifact (hash mismatch): " + path) {}
};

/// Numerical failures (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

#define DRSC_NUMERICAL_ERROR(Name)           \
  class Name : public NumericalError {       \
   public:                                   \
    explicit Name(const std::string& what)   \
        : NumericalError(#Name ": " + what) {} \
  }

DRSC_NUMERICAL_ERROR(ConcentrationOutOfRange);
DRSC_NUMERICAL_ERROR(NonFiniteState);
DRSC_NUMERICAL_ERROR(NonFiniteOutput);
DRSC_NUMERICAL_ERROR(WindowTooLong);
DRSC_NUMERICAL_ERROR(DegenerateData);
DRSC_NUMERICAL_ERROR(NonFiniteLoss);
DRSC_NUMERICAL_ERROR(SingularCovariance);
DRSC_NUMERICAL_ERROR(InfeasibleAtSigmaMax);
DRSC_NUMERICAL_ERROR(NonFiniteGradient);
DRSC_NUMERICAL_ERROR(OverflowGuard);

#undef DRSC_NUMERICAL_ERROR

}  // namespace drsc
