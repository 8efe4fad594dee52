#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fedban {

// Every library failure derives from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct NegativeQuadraticForm : Error {
  using Error::Error;
};
struct GenerationFailure : Error {
  using Error::Error;
};
struct MeanOutOfRange : Error {
  using Error::Error;
};
struct ActionNotInSet : Error {
  using Error::Error;
};
struct InvalidBudget : Error {
  using Error::Error;
};
struct TreeFull : Error {
  using Error::Error;
};
struct EmptyTree : Error {
  using Error::Error;
};
struct BoundViolation : Error {
  using Error::Error;
};
struct Disconnected : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct MissingAxis : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Carries every violated invariant found while checking a config.
struct ValidationError : Error {
  std::vector<std::string> issues;

  explicit ValidationError(std::vector<std::string> found)
      : Error(join(found)), issues(std::move(found)) {}

 private:
  static std::string join(const std::vector<std::string>& found) {
    std::string out = "invalid configuration:";
    for (const auto& f : found) out += "\n  - " + f;
    return out;
  }
};

}  // namespace fedban
