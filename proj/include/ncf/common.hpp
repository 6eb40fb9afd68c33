#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ncf {

/// Invalid or unsupported configuration value (scheme names, sizes, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside an operation's domain (index range, width mismatch, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal contract, e.g. a tape replayed against a different network.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives the seed of substream `stream` from `parent`. Substreams of the
/// same parent are decorrelated and independent of how work is scheduled.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::uint64_t stream) {
  return mix64(mix64(parent) ^ mix64(stream * 0xd1342543de82ef95ULL + 1));
}

/// Fixed substream identifiers inside one training run.
enum class Stream : std::uint64_t {
  source = 1,
  relay1_noise = 2,
  relay2_noise = 3,
  init = 4,
  evaluation = 5,
  finetune = 6,
};

inline Rng make_rng(std::uint64_t parent, Stream stream) {
  return Rng(split_seed(parent, static_cast<std::uint64_t>(stream)));
}

inline constexpr double kLn2 = 0.69314718055994530942;

}  // namespace ncf
