#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Deliberately naive: double precision, no FFT shortcuts.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsh/common.hpp"

namespace tsh::test {

/// Direct DFT bins 0..n/2 of x (length n).
inline std::vector<std::complex<double>> direct_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * t) / n);
    }
    out[k] = acc;
  }
  return out;
}

/// Full linear convolution by the textbook double loop.
inline std::vector<double> direct_convolve(std::span<const float> x, std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += double(x[i]) * h[j];
  return y;
}

/// Scale-invariant SNR written straight from its definition.
inline double textbook_si_snr(std::span<const float> est, std::span<const float> ref,
                              bool zero_mean = true, double cap = 60.0) {
  const std::size_t n = ref.size();
  double me = 0.0, mr = 0.0;
  if (zero_mean) {
    for (std::size_t i = 0; i < n; ++i) {
      me += est[i];
      mr += ref[i];
    }
    me /= n;
    mr /= n;
  }
  double dot = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += (est[i] - me) * (ref[i] - mr);
    rr += (ref[i] - mr) * (ref[i] - mr);
  }
  const double alpha = dot / rr;
  double ts = 0.0, es = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = alpha * (ref[i] - mr);
    const double e = (est[i] - me) - s;
    ts += s * s;
    es += e * e;
  }
  if (es == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(ts / es));
}

inline double textbook_snr(std::span<const float> est, std::span<const float> ref,
                           double cap = 60.0) {
  double rr = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    rr += double(ref[i]) * ref[i];
    ee += (double(ref[i]) - est[i]) * (double(ref[i]) - est[i]);
  }
  if (ee == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(rr / ee));
}

/// Welch PSD (Hann segments, 50 % overlap) and the least-squares slope of
/// 10*log10(PSD) against log10(f) over [f_lo, f_hi] Hz, in dB per decade.
inline double welch_slope_db_per_decade(std::span<const float> x, int seg = 1024,
                                        double f_lo = 20.0, double f_hi = 2000.0,
                                        double fs = 16000.0) {
  const int bins = seg / 2 + 1;
  std::vector<double> psd(bins, 0.0), win(seg);
  for (int i = 0; i < seg; ++i) win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / seg);
  // Local radix-2 FFT so the oracle does not share the library FFT.
  std::vector<std::complex<double>> buf(seg);
  auto fft = [&](std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const auto w = std::polar(1.0, -2.0 * M_PI / len);
      for (std::size_t i = 0; i < n; i += len) {
        std::complex<double> wk = 1.0;
        for (std::size_t k = 0; k < len / 2; ++k, wk *= w) {
          const auto u = a[i + k], v = a[i + k + len / 2] * wk;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
        }
      }
    }
  };
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += seg / 2, ++segments) {
    for (int i = 0; i < seg; ++i) buf[i] = double(x[start + i]) * win[i];
    fft(buf);
    for (int k = 0; k < bins; ++k) psd[k] += std::norm(buf[k]);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 1; k < bins; ++k) {
    const double f = k * fs / seg;
    if (f < f_lo || f > f_hi) continue;
    const double lx = std::log10(f), ly = 10.0 * std::log10(psd[k] / segments);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Lag (right relative to left, samples) of the cross-correlation peak
/// within +/- max_lag.
inline int xcorr_peak_lag(std::span<const float> l, std::span<const float> r, int max_lag) {
  int best = 0;
  double best_v = -1e300;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      const long j = static_cast<long>(i) + lag;
      if (j < 0 || j >= static_cast<long>(r.size())) continue;
      acc += double(l[i]) * r[j];
    }
    if (acc > best_v) {
      best_v = acc;
      best = lag;
    }
  }
  return best;
}

inline Mono random_signal(std::size_t n, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  Mono x(n);
  for (auto& v : x) v = static_cast<float>(scale * rng.normal());
  return x;
}

inline BinauralBuffer random_stereo(std::size_t n, std::uint64_t seed, double scale = 0.3) {
  return BinauralBuffer(random_signal(n, seed, scale), random_signal(n, seed ^ 0xabcdefULL, scale));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tsh_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tsh::test
