#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conncbf {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
struct PreconditionError : Error {
  using Error::Error;
};

/// An eigensolve or other numeric kernel failed to produce a usable result.
struct NumericalError : Error {
  using Error::Error;
};

/// Scenario or parameter validation failed. The message carries the field path.
struct ValidationError : Error {
  using Error::Error;
};

/// File system failure while reading scenarios or writing outputs.
struct IoError : Error {
  using Error::Error;
};

/// The stacked constraint set admits no solution. Carries the tags of an
/// irreducible subset so the caller can see which barriers conflict.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& message, std::vector<std::string> tags)
      : Error(message), constraint_tags_(std::move(tags)) {}

  const std::vector<std::string>& constraint_tags() const { return constraint_tags_; }

 private:
  std::vector<std::string> constraint_tags_;
};

}  // namespace conncbf
