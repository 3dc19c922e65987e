#pragma once

#include <stdexcept>
#include <string>

namespace thinlimit {

/// Base of every error raised by the library. The CLI maps subclasses to
/// exit codes, so new errors should derive from the closest category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input / configuration problems (CLI exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class HypothesisViolation : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class IntegralDiverges : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class AssemblyContractViolation : public Error {
 public:
  using Error::Error;
};

// Numerical failures (CLI exit 3).
class SolverError : public Error {
 public:
  using Error::Error;
};

class EmptyNullspace : public SolverError {
 public:
  using SolverError::SolverError;
};

class ResidualTooLarge : public SolverError {
 public:
  using SolverError::SolverError;
};

class SuspectedEvenRoot : public SolverError {
 public:
  using SolverError::SolverError;
};

class ThresholdOnEigenvalue : public SolverError {
 public:
  using SolverError::SolverError;
};

class BlowupDetected : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace thinlimit
