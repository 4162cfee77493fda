#pragma once

#include <stdexcept>
#include <string>

namespace gsr {

// Root of every error raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Index or position outside an image.
class BoundsError : public Error {
public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (negative
// penalty argument, non-finite matrix entries, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// A caller broke a documented precondition (dimension mismatch,
// non-monotone weights, invalid parameter).
class ContractError : public Error {
public:
  using Error::Error;
};

// Search window holds fewer candidate patches than the group size.
class InsufficientCandidatesError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace gsr
