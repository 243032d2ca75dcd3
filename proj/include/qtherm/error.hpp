#pragma once

#include <stdexcept>
#include <string>

namespace qtherm {

/// Input violates a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its target accuracy.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two quenches with equal mean energy but different entropy; no finite
/// temperature can be assigned.
class DegenerateEnergyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace qtherm
