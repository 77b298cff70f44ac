#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace conjlab {

// All library errors carry a stable code (used in CLI reports) plus a
// human-readable detail. DomainError maps to CLI exit 2, ConfigError to 1.
class Error : public std::runtime_error {
 public:
  Error(const std::string& code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(code) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline std::string num(double v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
}  // namespace detail

struct NonPositiveRho : DomainError {
  explicit NonPositiveRho(double rho)
      : DomainError("NonPositiveRho", "rho must be > 0, got " + detail::num(rho)) {}
};

struct RhoOutOfRange : DomainError {
  explicit RhoOutOfRange(double rho)
      : DomainError("RhoOutOfRange", "rho must lie in (0,1), got " + detail::num(rho)) {}
};

struct TruncationMismatch : DomainError {
  TruncationMismatch(std::size_t n, std::size_t trunc_n)
      : DomainError("TruncationMismatch", "requested order " + detail::num(n) +
                                              " exceeds truncation order " + detail::num(trunc_n)) {}
};

struct NonFiniteCoefficient : DomainError {
  explicit NonFiniteCoefficient(std::size_t index)
      : DomainError("NonFiniteCoefficient",
                    "coefficient at index " + detail::num(index) + " is not finite") {}
};

struct LengthMismatch : DomainError {
  LengthMismatch(std::size_t lhs, std::size_t rhs)
      : DomainError("LengthMismatch",
                    "sequence lengths differ: " + detail::num(lhs) + " vs " + detail::num(rhs)) {}
};

struct InvalidSimplexPoint : DomainError {
  explicit InvalidSimplexPoint(const std::string& why)
      : DomainError("InvalidSimplexPoint", why) {}
};

struct TargetMeanOutOfRange : DomainError {
  TargetMeanOutOfRange(double target, std::size_t n)
      : DomainError("TargetMeanOutOfRange", "target mean " + detail::num(target) +
                                                " outside [0, " + detail::num(n) + "]") {}
};

struct EmptySchedule : DomainError {
  EmptySchedule() : DomainError("EmptySchedule", "checkpoint schedule is empty") {}
};

struct ScheduleNotIncreasing : DomainError {
  explicit ScheduleNotIncreasing(std::size_t position)
      : DomainError("ScheduleNotIncreasing",
                    "schedule must be strictly increasing at position " + detail::num(position)) {}
};

struct InvalidGrid : DomainError {
  explicit InvalidGrid(const std::string& why) : DomainError("InvalidGrid", why) {}
};

struct EmptyEffectiveDomain : DomainError {
  EmptyEffectiveDomain()
      : DomainError("EmptyEffectiveDomain", "function has no finite value on the grid") {}
};

struct OutOfBox : DomainError {
  OutOfBox(std::size_t axis, double coord)
      : DomainError("OutOfBox", "coordinate " + detail::num(coord) +
                                    " outside the grid box on axis " + detail::num(axis)) {}
};

struct DimensionMismatch : DomainError {
  DimensionMismatch(std::size_t lhs, std::size_t rhs)
      : DomainError("DimensionMismatch",
                    "dimensions differ: " + detail::num(lhs) + " vs " + detail::num(rhs)) {}
};

struct NonSquare : DomainError {
  NonSquare(std::size_t rows, std::size_t cols)
      : DomainError("NonSquare",
                    "matrix is " + detail::num(rows) + "x" + detail::num(cols)) {}
};

struct NegativeEntry : DomainError {
  explicit NegativeEntry(const std::string& where)
      : DomainError("NegativeEntry", where) {}
};

struct NotBijective : DomainError {
  explicit NotBijective(std::size_t state)
      : DomainError("NotBijective",
                    "state " + detail::num(state) + " has no unique preimage under the map") {}
};

struct RadiusNotSubcritical : DomainError {
  explicit RadiusNotSubcritical(double radius)
      : DomainError("RadiusNotSubcritical",
                    "spectral radius " + detail::num(radius) + " is not < 1") {}
};

struct OracleFailure : DomainError {
  explicit OracleFailure(const std::string& why) : DomainError("OracleFailure", why) {}
};

struct DomainViolation : DomainError {
  explicit DomainViolation(const std::string& why) : DomainError("DomainViolation", why) {}
};

struct ConfigInvalid : ConfigError {
  explicit ConfigInvalid(const std::string& why) : ConfigError("ConfigInvalid", why) {}
  ConfigInvalid(const std::string& code, const std::string& why) : ConfigError(code, why) {}
};

}  // namespace conjlab
