#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "temprel/edge.hpp"

namespace temprel {

/// Malformed or unusable run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus or model content that cannot be parsed or violates the schema.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses but violates a semantic rule (unknown label, bad orientation, ...).
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Search aborted (node cap) or was asked to solve an infeasible problem.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public SolverError {
 public:
  InfeasibleError(const std::string& what, std::vector<EdgeKey> conflicts)
      : SolverError(what), conflicts_(std::move(conflicts)) {}
  const std::vector<EdgeKey>& conflicts() const { return conflicts_; }

 private:
  std::vector<EdgeKey> conflicts_;
};

/// Graph handed to closure/awareness contradicts the composition table.
class InconsistentGraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace temprel
