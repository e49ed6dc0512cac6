#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace sigmatch {

using StudentId = std::uint32_t;
using UniversityId = std::uint32_t;

/// Sentinel partner for an unmatched student.
inline constexpr UniversityId kUnmatched = std::numeric_limits<UniversityId>::max();
inline constexpr StudentId kNoStudent = std::numeric_limits<StudentId>::max();

using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class InvalidMatchingError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

// splitmix64 finalizer; used as the seed-splitting hash.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed i of a root seed. Replications and cells derive their streams
/// through this so that execution order never changes results.
constexpr std::uint64_t child_seed(std::uint64_t root, std::uint64_t i) {
  return mix64(mix64(root) ^ mix64(i + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t child_seed(std::uint64_t root, std::uint64_t i, std::uint64_t j) {
  return child_seed(child_seed(root, i), j);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace sigmatch
