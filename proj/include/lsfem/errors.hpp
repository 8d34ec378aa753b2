// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lsfem {

// Bad user input: invalid arguments, malformed configs, violated preconditions.
// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure during a solve or a time step. Exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called in a state it cannot handle (empty interface,
// missing sign change, degenerate shape).
class InvalidStateError : public std::runtime_error {
 public:
  explicit InvalidStateError(const std::string& what) : std::runtime_error(what) {}
};

// Raised instead of dividing by a vanishing |grad phi|: the level set must be
// reinitialized before the requested quantity is meaningful.
class NeedsReinitError : public std::runtime_error {
 public:
  explicit NeedsReinitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lsfem
