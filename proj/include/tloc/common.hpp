#pragma once

#include <stdexcept>
#include <string>

namespace tloc {

// Base for all library errors. Subclasses distinguish caller mistakes
// (UsageError), malformed data (ValidationError), shape conflicts in the
// compute graph (ShapeError) and file problems (IoError).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace tloc
