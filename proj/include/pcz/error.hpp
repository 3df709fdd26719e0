#pragma once

#include <stdexcept>
#include <string>

namespace pcz {

enum class ErrorKind {
  InvalidGeometry,
  IncompleteMatrix,
  AsymmetricMatrix,
  UnreadableFile,
  HeaderMismatch,
  MissingDistance,
  EmptyNetwork,
  ZeroDistance,
  UnknownNode,
  UnknownZone,
  IslandNoNeighbors,
  NonConvergence,
  Infeasible,
  BadInput,
};

// Single exception type; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

}  // namespace pcz
