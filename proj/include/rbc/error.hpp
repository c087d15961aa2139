#pragma once

#include <stdexcept>
#include <string>

namespace rbc {

// Inputs that are well-formed but violate a documented bound or invariant.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Config documents that cannot be parsed or do not follow the schema.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Instance is too large for an exact enumeration.
class SizeGuardError : public std::length_error {
public:
  using std::length_error::length_error;
};

}  // namespace rbc
