#pragma once

#include <complex>
#include <memory>
#include <span>

namespace tsh::dsp {

/// Real-input FFT of a fixed length producing the n/2+1 half spectrum.
/// Forward is unnormalised; inverse scales by 1/n. Not thread-safe: each
/// owner keeps its own instance.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft& other);
  RealFft& operator=(const RealFft& other);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  void forward(std::span<const float> in, std::span<std::complex<float>> out);
  void inverse(std::span<const std::complex<float>> in, std::span<float> out);

  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tsh::dsp
