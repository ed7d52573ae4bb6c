#pragma once

#include <stdexcept>
#include <string>

namespace kpc {

// Base class of every error raised by the library. Callers that only need to
// distinguish "bad input" from "numerical trouble" can use the two branches.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

// Input / construction errors.
class ValidationError : public InputError {
public:
  ValidationError(std::string field, const std::string& what)
      : InputError(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

class ParseError : public InputError {
public:
  ParseError(std::string where, const std::string& what)
      : InputError(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

class DegenerateModes : public InputError {
public:
  using InputError::InputError;
};

class DegenerateDepth : public InputError {
public:
  using InputError::InputError;
};

class IoError : public InputError {
public:
  IoError(std::string path, const std::string& what)
      : InputError(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class InsufficientWindow : public InputError {
public:
  using InputError::InputError;
};

// Numerical errors.
class SingularDenominator : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class OnSingularSet : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class StencilOnSingularSet : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NonFinite : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class NumericalConditioning : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class FewerThanTwoTroughs : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace kpc
