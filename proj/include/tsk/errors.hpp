#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tsk {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File access / malformed input files.
struct IoError : Error {
  using Error::Error;
};

/// Located diagnostic for text inputs (cloud files and the skill DSL).
struct ParseError : Error {
  int line;
  int column;
  ParseError(const std::string& msg, int line_, int column_ = 0)
      : Error(std::to_string(line_) + (column_ > 0 ? ":" + std::to_string(column_) : "") + ": " + msg),
        line(line_),
        column(column_) {}
};

struct DegeneracyError : Error {
  using Error::Error;
};

struct FitError : Error {
  using Error::Error;
};

/// The tool has no part usable for the requested task.
struct AffordanceError : Error {
  using Error::Error;
};

struct BindError : Error {
  std::vector<std::string> missing;
  explicit BindError(std::vector<std::string> names)
      : Error(format(names)), missing(std::move(names)) {}

 private:
  static std::string format(const std::vector<std::string>& names) {
    std::string msg = "unresolved feature name(s):";
    for (const auto& n : names) msg += " " + n;
    return msg;
  }
};

struct EvalError : Error {
  using Error::Error;
};

struct SolverError : Error {
  using Error::Error;
};

}  // namespace tsk
