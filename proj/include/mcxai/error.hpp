#pragma once

#include <stdexcept>
#include <string>

namespace mcxai {

// Base for every error raised by the library. Subclasses let callers (the CLI
// in particular) map failures onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class DuplicateActionError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class NoCompletePathError : public Error {
 public:
  using Error::Error;
};

class PathNotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcxai
