#include "tsh/dsp/fft.hpp"

#include <unsupported/Eigen/FFT>

#include "tsh/common.hpp"

namespace tsh::dsp {

struct RealFft::Impl {
  Eigen::FFT<float> f;
  Eigen::FFT<double> d;
  Impl() {
    f.SetFlag(Eigen::FFT<float>::HalfSpectrum);
    d.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2) throw ConfigError("FFT length must be >= 2");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;
RealFft::RealFft(const RealFft& other) : n_(other.n_), impl_(std::make_unique<Impl>()) {}
RealFft& RealFft::operator=(const RealFft& other) {
  if (this != &other) {
    n_ = other.n_;
    impl_ = std::make_unique<Impl>();
  }
  return *this;
}

namespace {
void check(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw SizeMismatch(std::string("RealFft ") + what + ": expected " + std::to_string(want) +
                       ", got " + std::to_string(got));
  }
}
}  // namespace

void RealFft::forward(std::span<const float> in, std::span<std::complex<float>> out) {
  check(in.size(), n_, "input");
  check(out.size(), bins(), "output");
  impl_->f.fwd(out.data(), in.data(), n_);
}

void RealFft::inverse(std::span<const std::complex<float>> in, std::span<float> out) {
  check(in.size(), bins(), "input");
  check(out.size(), n_, "output");
  impl_->f.inv(out.data(), in.data(), n_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  check(in.size(), n_, "input");
  check(out.size(), bins(), "output");
  impl_->d.fwd(out.data(), in.data(), n_);
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  check(in.size(), bins(), "input");
  check(out.size(), n_, "output");
  impl_->d.inv(out.data(), in.data(), n_);
}

}  // namespace tsh::dsp
