#pragma once

#include <stdexcept>
#include <string>

namespace vemfeti {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command line, configuration or API arguments.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Mesh invariant or conformity violation.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Malformed `.poly3d` input; carries the 1-based line number.
class ParseError : public MeshError {
 public:
  ParseError(int line, const std::string& what)
      : MeshError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A feature outside the supported mesh class (e.g. nonconvex cells).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Nonpositive pivot during a Cholesky factorization.
class NotSpdError : public NumericalError {
 public:
  NotSpdError(long row, const std::string& context)
      : NumericalError(context + ": matrix not positive definite at row " + std::to_string(row)),
        row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

/// Nonpositive curvature or preconditioned residual norm inside PCG.
class IndefiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace vemfeti
