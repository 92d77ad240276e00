// minibench/common.h

// Copyright 2026  The minibench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MINIBENCH_COMMON_H_
#define MINIBENCH_COMMON_H_

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace minibench {

inline constexpr const char *kVersion = "1.0.0";

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad JSON line, bad magic, truncated payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A requested id or file is absent.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Precondition or invariant violated by the caller's arguments.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Run configuration cannot be used (exit code 2 in the CLI).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string HexDigest(std::uint64_t value);

std::string ReadFileBytes(const std::filesystem::path &path);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partially written artifact.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view bytes);

// Little-endian scalar append / read; the host is checked to be little-endian
// where binary formats are produced.
template <typename T>
void PutLE(std::string *out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out->append(buf, sizeof(T));
}

template <typename T>
T GetLE(std::string_view bytes, std::size_t pos) {
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  return v;
}

std::vector<std::string> SplitWhitespace(std::string_view text);

// Lowercases ASCII letters.
std::string ToLower(std::string_view text);

}  // namespace minibench

#endif  // MINIBENCH_COMMON_H_
