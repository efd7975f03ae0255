#pragma once

#include <stdexcept>
#include <string>

namespace ridgelim {

// Input-side failures: malformed spec strings, out-of-domain parameters,
// ill-formed measures. The CLI maps these to exit code 1.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numeric failures discovered while solving. The CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveArgumentError : public ParseError {
 public:
  using ParseError::ParseError;
};

class InvalidMeasureError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptySpectrumError : public ParseError {
 public:
  using ParseError::ParseError;
};

class InvalidCoefficientsError : public ParseError {
 public:
  using ParseError::ParseError;
};

class CaseMismatchError : public ParseError {
 public:
  using ParseError::ParseError;
};

class SpecParseError : public ParseError {
 public:
  using ParseError::ParseError;
};

class NoBracketError : public NumericError {
 public:
  using NumericError::NumericError;
};

class MaxIterationsError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateDenominatorError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SolveFailureError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace ridgelim
