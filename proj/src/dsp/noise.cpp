#include "tsh/dsp/noise.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "tsh/dsp/fft.hpp"

namespace tsh::dsp {

double noise_exponent(NoiseColor c) {
  switch (c) {
    case NoiseColor::White: return 0.0;
    case NoiseColor::Pink: return 1.0;
    case NoiseColor::Brown: return 2.0;
  }
  return 0.0;
}

NoiseColor parse_noise_color(std::string_view name) {
  if (name == "white") return NoiseColor::White;
  if (name == "pink") return NoiseColor::Pink;
  if (name == "brown") return NoiseColor::Brown;
  throw ConfigError("unknown noise color '" + std::string(name) + "'");
}

std::string to_string(NoiseColor c) {
  switch (c) {
    case NoiseColor::White: return "white";
    case NoiseColor::Pink: return "pink";
    case NoiseColor::Brown: return "brown";
  }
  return "white";
}

Mono colored_noise(NoiseColor kind, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  Mono out(len);
  if (kind == NoiseColor::White || len < 2) {
    for (auto& v : out) v = static_cast<float>(rng.normal());
    return out;
  }

  // Random complex spectrum with amplitude ~ f^(-beta/2). The DC bin borrows
  // the scale of the lowest nonzero frequency; normalisation makes the
  // expected output variance one.
  const double beta = noise_exponent(kind);
  const std::size_t n = len;
  const std::size_t bins = n / 2 + 1;
  std::vector<double> scale(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(std::max<std::size_t>(k, 1)) / static_cast<double>(n);
    scale[k] = std::pow(f, -beta / 2.0);
  }
  double w2 = 0.0;
  for (std::size_t k = 1; k < bins; ++k) {
    double w = scale[k];
    if (k == bins - 1) w *= (1.0 + static_cast<double>(n % 2)) / 2.0;
    w2 += w * w;
  }
  const double sigma = 2.0 * std::sqrt(w2) / static_cast<double>(n);

  std::vector<std::complex<double>> spec(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = rng.normal() * scale[k];
    const double im = rng.normal() * scale[k];
    spec[k] = {re, im};
  }
  spec[0] = {spec[0].real() * std::sqrt(2.0), 0.0};
  if (n % 2 == 0) spec[bins - 1] = {spec[bins - 1].real() * std::sqrt(2.0), 0.0};

  RealFft fft(static_cast<int>(n));
  std::vector<double> time(n);
  fft.inverse(spec, time);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(time[i] / sigma);
  return out;
}

}  // namespace tsh::dsp
