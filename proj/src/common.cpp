#include "tsh/common.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace tsh {

BinauralBuffer::BinauralBuffer(Mono l, Mono r) : left(std::move(l)), right(std::move(r)) {
  if (left.size() != right.size()) {
    throw SizeMismatch("binaural channels differ in length: " + std::to_string(left.size()) +
                       " vs " + std::to_string(right.size()));
  }
}

void BinauralBuffer::resize(std::size_t n) {
  left.resize(n, 0.0f);
  right.resize(n, 0.0f);
}

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace tsh
