#pragma once

#include <stdexcept>
#include <string>

namespace mpmg {

// Argument outside the mathematical domain of an operation (beta <= 0, v <= 0, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Caller broke an interface contract (shape mismatch, stale cache, ragged logs).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Operation used in the wrong lifecycle state (step before reset).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

// Problem size beyond what exhaustive enumeration supports.
class CapacityError : public std::length_error {
 public:
  explicit CapacityError(const std::string& what) : std::length_error(what) {}
};

// Non-finite value produced by training.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpmg
