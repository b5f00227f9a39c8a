#include "tsh/scene/render.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "tsh/dsp/fft.hpp"

namespace tsh::scene {

namespace {

std::size_t fft_size_for(std::size_t n) {
  std::size_t s = 2;
  while (s < n) s <<= 1;
  return s;
}

struct Run {
  std::size_t entry;
  std::size_t begin;  // sample
  std::size_t end;
};

}  // namespace

std::vector<double> fft_convolve(std::span<const float> x, std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t out_len = x.size() + h.size() - 1;
  const std::size_t n = fft_size_for(out_len);
  dsp::RealFft fft(static_cast<int>(n));
  std::vector<double> a(n, 0.0), b(n, 0.0);
  std::copy(x.begin(), x.end(), a.begin());
  std::copy(h.begin(), h.end(), b.begin());
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.inverse(fa, a);
  a.resize(out_len);
  return a;
}

BinauralBuffer render_moving_source(std::span<const float> mono, const Trajectory& traj,
                                    const BrirSet& set, const RenderOptions& opts) {
  const std::size_t n = mono.size();
  const std::size_t steps = Trajectory::steps_for_samples(n);
  if (traj.size() != steps) {
    throw SizeMismatch("trajectory has " + std::to_string(traj.size()) + " steps but audio needs " +
                       std::to_string(steps));
  }
  BinauralBuffer out(n);
  if (n == 0) return out;

  const auto step_len = static_cast<std::size_t>(std::lround(traj.step_s * kSampleRate));
  std::vector<Run> runs;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t e = set.nearest_index(traj.azimuth_deg[s], traj.polar_deg[s]);
    const std::size_t b = s * step_len;
    const std::size_t end = std::min(n, b + step_len);
    if (!runs.empty() && runs.back().entry == e) {
      runs.back().end = end;
    } else {
      runs.push_back({e, b, end});
    }
  }

  const auto fade = static_cast<std::size_t>(std::lround(opts.crossfade_ms * 1e-3 * kSampleRate));
  const std::size_t half = fade / 2;
  auto weight = [&](const Run& r, std::size_t i) {
    double w = 1.0;
    if (r.begin > 0 && half > 0 && i < r.begin + half) {
      w = (static_cast<double>(i) - static_cast<double>(r.begin - half) + 0.5) / (2.0 * half);
    } else if (r.end < n && half > 0 && i + half >= r.end) {
      w = 1.0 - (static_cast<double>(i) - static_cast<double>(r.end - half) + 0.5) / (2.0 * half);
    }
    return w;
  };

  std::vector<double> acc_l(n, 0.0), acc_r(n, 0.0);
  for (const Run& r : runs) {
    const BrirEntry& entry = set[r.entry];
    const std::size_t taps = entry.impulse.size();
    const std::size_t lo = r.begin > half ? r.begin - half : 0;
    const std::size_t hi = std::min(n, r.end + half);
    const std::size_t in_lo = lo + 1 > taps ? lo + 1 - taps : 0;
    const auto slice = mono.subspan(in_lo, hi - in_lo);
    const auto yl = fft_convolve(slice, entry.impulse.left);
    const auto yr = fft_convolve(slice, entry.impulse.right);
    for (std::size_t i = lo; i < hi; ++i) {
      const double w = weight(r, i);
      acc_l[i] += w * yl[i - in_lo];
      acc_r[i] += w * yr[i - in_lo];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.left[i] = static_cast<float>(acc_l[i]);
    out.right[i] = static_cast<float>(acc_r[i]);
  }
  return out;
}

}  // namespace tsh::scene
