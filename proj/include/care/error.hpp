#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace care {

enum class ErrorKind {
  kInvalidArgument,
  kDegenerateDesign,
  kDegenerateContrast,
  kConnectivity,
  kParse,
  kConfig,
};

// Base class for every error raised by the library. The kind drives the CLI
// exit code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

// Augmented design [1, X] is rank deficient, or a covariate column is constant.
class DegenerateDesignError : public Error {
 public:
  DegenerateDesignError(const std::string& what, std::ptrdiff_t rank = -1)
      : Error(ErrorKind::kDegenerateDesign, what), rank_(rank) {}
  std::ptrdiff_t rank() const noexcept { return rank_; }

 private:
  std::ptrdiff_t rank_;
};

// Contrast lies entirely in the unidentifiable directions (P c = 0).
class DegenerateContrastError : public Error {
 public:
  explicit DegenerateContrastError(const std::string& what)
      : Error(ErrorKind::kDegenerateContrast, what) {}
};

class ConnectivityError : public Error {
 public:
  ConnectivityError(const std::string& what,
                    std::vector<std::vector<std::size_t>> components)
      : Error(ErrorKind::kConnectivity, what),
        components_(std::move(components)) {}

  const std::vector<std::vector<std::size_t>>& components() const noexcept {
    return components_;
  }

 private:
  std::vector<std::vector<std::size_t>> components_;
};

// Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : Error(ErrorKind::kParse, what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

}  // namespace care
