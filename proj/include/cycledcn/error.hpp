// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cdn {

/// Bad input: shapes, ranges, configuration values. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss term became non-finite during training. Maps to CLI exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string term, const std::string& what)
      : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// Base class for volume / checkpoint file errors.
class FileFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadMagicError : public FileFormatError {
 public:
  using FileFormatError::FileFormatError;
};

class SizeMismatchError : public FileFormatError {
 public:
  using FileFormatError::FileFormatError;
};

class NonFinitePayloadError : public FileFormatError {
 public:
  using FileFormatError::FileFormatError;
};

}  // namespace cdn
