#pragma once

#include <stdexcept>
#include <string>

namespace qlm {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A state vector collapsed to (numerically) zero norm, or violates unit norm.
class DegenerateStateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Iterative routine failed to converge, or a non-finite value appeared.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A pooled feature vector has zero norm, so cosine matching is undefined.
class ZeroFeatureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Corpus ingestion or sampling failure.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or file.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace qlm
