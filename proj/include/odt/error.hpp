/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The odtree Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef ODT_ERROR_HPP
#define ODT_ERROR_HPP

#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

namespace odt {

/// A non-fatal finding from one of the validate_* functions.
struct Diagnostic {
  std::string subject;  // offending variable, constraint, column, cell, ...
  std::string message;

  [[nodiscard]] std::string to_string() const { return subject + ": " + message; }
  bool operator==(const Diagnostic&) const = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV rows, LP files, JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well formed but does not match the declared roles / schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A value cannot be encoded under the binarization in force.
class EncodingError : public Error {
 public:
  using Error::Error;
};

// A tree plan violates its structural invariants.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NamingError : public Error {
 public:
  using Error::Error;
};

// Solver output could not be turned into a tree plan.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

// An estimator would divide by an empty count.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// Combinatorial guard of the exhaustive oracle.
class GuardError : public Error {
 public:
  using Error::Error;
};

// Dataset/config rejected before building a model; carries the diagnostics.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics))
  {
  }

  [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& diagnostics)
  {
    std::string out = "invalid input";
    for (const auto& d : diagnostics) out += "; " + d.to_string();
    return out;
  }

  std::vector<Diagnostic> diagnostics_;
};

}  // namespace odt

#endif  // ODT_ERROR_HPP
