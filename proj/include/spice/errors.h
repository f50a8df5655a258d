#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spice {

// Root of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Violation of a scene-graph invariant while building or extending a graph.
class GraphError : public Error {
 public:
  enum class Kind { kDuplicateId, kUnknownId, kInvalidLabel, kInvalidBox };

  GraphError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Text that does not follow a grammar. `location` is a 1-based line number
// for context text and a 1-based command index for parse programs.
class ParseError : public Error {
 public:
  ParseError(std::size_t location, const std::string& what)
      : Error(what), location_(location) {}
  std::size_t location() const { return location_; }

 private:
  std::size_t location_;
};

// A parse program that cannot be applied to its prior context.
class ExecutionError : public Error {
 public:
  ExecutionError(GraphError::Kind kind, std::size_t op_index,
                 const std::string& what)
      : Error(what), kind_(kind), op_index_(op_index) {}
  GraphError::Kind kind() const { return kind_; }
  // 0-based index of the failing operation.
  std::size_t op_index() const { return op_index_; }

 private:
  GraphError::Kind kind_;
  std::size_t op_index_;
};

// A graph that is supposed to extend another one drops or renames content.
class NonMonotonicUpdate : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ServiceUnavailable : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Malformed record in a JSONL input; `line` is 1-based.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Cross-entropy hit log(0) at a target position.
class InfiniteLoss : public Error {
 public:
  InfiniteLoss(std::size_t position, const std::string& what)
      : Error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace spice
