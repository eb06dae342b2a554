#pragma once

#include <stdexcept>
#include <string>

namespace nf {

/// Caller supplied something that violates a documented precondition.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment integrity broken (index not restored, mixed fingerprints, ...).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Provider output did not match the task's output schema. The raw text is
/// kept so it can be surfaced, never repaired.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::string raw) : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProbeConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nf
