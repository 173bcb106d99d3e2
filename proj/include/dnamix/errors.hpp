#ifndef DNAMIX_ERRORS_HPP
#define DNAMIX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dnamix {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad tables, bad files, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Input-file problem with location information.
class InputError : public ValidationError {
 public:
  InputError(const std::string& file, std::size_t line, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Numerical failure: a computation could not be carried out.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Propagation found a charge with zero total mass.
class ImpossibleEvidence : public NumericalError {
 public:
  ImpossibleEvidence() : NumericalError("impossible evidence: normalizing constant is zero") {}
  using NumericalError::NumericalError;
};

}  // namespace dnamix

#endif  // DNAMIX_ERRORS_HPP
