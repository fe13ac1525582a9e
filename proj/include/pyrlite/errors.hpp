#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pyrlite {

/// Root of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyKindError : public Error {
 public:
  using Error::Error;
};

/// A value cannot be encoded within the log format limits.
class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Truncated or malformed log bytes.
class LogCorruption : public Error {
 public:
  LogCorruption(std::uint64_t offset, const std::string& what, std::uint64_t last_good = 0)
      : Error("log corruption at offset " + std::to_string(offset) + ": " + what),
        offset_(offset),
        last_good_(last_good) {}
  std::uint64_t offset() const noexcept { return offset_; }
  /// End of the last transaction that replayed cleanly.
  std::uint64_t last_good_boundary() const noexcept { return last_good_; }

 private:
  std::uint64_t offset_;
  std::uint64_t last_good_;
};

class DurableAppendError : public Error {
 public:
  using Error::Error;
};

class RelocationError : public Error {
 public:
  using Error::Error;
};

class AuthorizationError : public Error {
 public:
  using Error::Error;
};

class AuthenticationError : public Error {
 public:
  using Error::Error;
};

/// Statement-level failure: unknown names, type mismatches, bad schema changes.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// Runtime SQL evaluation errors (division by zero, cardinality, types).
class SqlError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, int line, int column)
      : Error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// A remote contributor could not be reached or refused the request.
class RemoteError : public Error {
 public:
  RemoteError(const std::string& msg, int status = 0) : Error(msg), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace pyrlite
