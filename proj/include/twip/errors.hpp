#pragma once

#include <stdexcept>
#include <string>

namespace twip {

/// Invalid numeric input (non-finite state, bad parameter, out-of-range option).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Controller or set synthesis could not produce a valid result.
class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The invariant set could not be certified or is not admissible.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage was run before the artifacts it consumes exist.
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twip
