// SPDX-FileCopyrightText: 2026 crossview authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace crossview {

/// Base class for all crossview errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// File missing, unreadable, or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File or buffer contents violate the declared layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Degenerate linear algebra (singular transform, broken rigidity).
class MathError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or empty required input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/array dimensions do not match the operation contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Streaming input arrived out of order.
class OrderError : public Error {
 public:
  using Error::Error;
};

/// An index table references beyond its target.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Input outside an operation's mathematical domain.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Paired containers disagree on element count or provenance.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace crossview
