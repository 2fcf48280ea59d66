// Copyright 2026 The prosfda Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace prosfda {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent array shapes or lengths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Precondition on a numeric argument violated (temperature, alpha, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, truncated or inconsistent dataset / checkpoint / log file.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unknown key in a configuration file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace prosfda
