// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef CTXK_ERRORS_HPP_
#define CTXK_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctxk {

// Input text is not valid UTF-8. `offset` is the byte offset of the first
// offending byte.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A parameter or loss became NaN/Inf. The message names the location.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reading or writing an artifact failed.
class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& what)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A record in an artifact file does not follow its schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctxk

#endif  // CTXK_ERRORS_HPP_
