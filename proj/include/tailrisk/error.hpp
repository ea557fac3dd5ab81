#ifndef TAILRISK_ERROR_HPP_
#define TAILRISK_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tailrisk {

/// Root of every exception thrown by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0)
      : Error("parse_error", what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error("validation_error", what) {}
};

struct AlignmentError : Error {
  explicit AlignmentError(const std::string& what) : Error("alignment_error", what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& what) : Error("degenerate_input", what) {}
};

struct FilterError : Error {
  explicit FilterError(const std::string& what) : Error("filter_error", what) {}
};

struct FitError : Error {
  explicit FitError(const std::string& what) : Error("fit_error", what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error("numerical_error", what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

}  // namespace tailrisk

#endif  // TAILRISK_ERROR_HPP_
