// Copyright 2026 The cfocus Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace cfocus {

// Base class for every error raised by the toolkit. Commands map any Error
// to a nonzero exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Mismatched tensor / signal shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Index outside of the valid range (channel, direction, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Numerical degeneracy: singular solves, zero gains, coincident positions.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A metric with no defined value (e.g. no active frames).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfocus
