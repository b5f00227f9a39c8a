#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsh {

inline constexpr int kSampleRate = 16000;

using Mono = std::vector<float>;

/// Planar two-channel audio. Both channels always have the same length.
struct BinauralBuffer {
  Mono left;
  Mono right;

  BinauralBuffer() = default;
  explicit BinauralBuffer(std::size_t n) : left(n, 0.0f), right(n, 0.0f) {}
  BinauralBuffer(Mono l, Mono r);

  std::size_t size() const { return left.size(); }
  bool empty() const { return left.empty(); }
  void resize(std::size_t n);
};

// Error hierarchy. CLI maps ConfigError -> exit 2 and DataError -> exit 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SizeMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ShapeMismatch : public DataError {
 public:
  using DataError::DataError;
};

class HashMismatch : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateEmbedding : public DataError {
 public:
  using DataError::DataError;
};

class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, std::int64_t chunk_index)
      : Error(what), chunk_index_(chunk_index) {}
  std::int64_t chunk_index() const { return chunk_index_; }

 private:
  std::int64_t chunk_index_;
};

/// Seeded generator with distribution code that does not depend on the
/// standard library implementation, so a seed reproduces the same bits on
/// every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  /// Derive an independent child seed.
  std::uint64_t fork() { return next_u64() ^ 0x9e3779b97f4a7c15ULL; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view s);
std::string to_hex(std::uint64_t v);

}  // namespace tsh
