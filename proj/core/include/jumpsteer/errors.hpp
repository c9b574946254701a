#pragma once

#include <stdexcept>

namespace jumpsteer {

// Thrown when a numerical routine cannot produce a result within its
// contract (step-size underflow, quadrature non-convergence, a state leaving
// the Bloch ball). Precondition violations use std::invalid_argument.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-posed computation whose answer is negative: no sign change of S in
// a search bracket, no certificate, no violation on a grid.
class NegativeVerdict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jumpsteer
