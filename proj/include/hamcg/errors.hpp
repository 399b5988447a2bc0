#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hamcg {

enum class ErrorKind {
  InvalidArgument,
  MissingInteraction,
  DegenerateCritical,
  SaddleValueCollision,
  UnstableStep,
  BoxTooSmall,
  GridTooCoarse,
  NearCriticalLevel,
  OutsideGraph,
  ComponentNotFound,
  TooCloseToSaddle,
  VanishingGradient,
  MeshTableMismatch,
  SolveFailure,
  EmptySource,
  BoundaryLeak,
  NonRepresentableResidual,
  ConfigInvalid,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this exception; `kind()` lets
// callers (and the CLI exit-code mapping) dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace hamcg
