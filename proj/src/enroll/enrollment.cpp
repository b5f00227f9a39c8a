#include "tsh/enroll/enrollment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/QR>

#include "tsh/dsp/fft.hpp"
#include "tsh/dsp/metrics.hpp"

namespace tsh::enroll {

namespace {

constexpr double kRelativeFloor = 1e-8;
constexpr double kSilence = 1e-20;
constexpr double kActiveRange = 1e-3;  // -30 dB

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(const SpectralProviderOptions& o) {
  const int bins = o.fft_len / 2 + 1;
  const double bin_hz = static_cast<double>(kSampleRate) / o.fft_len;
  const double lo = hz_to_mel(o.fmin_hz), hi = hz_to_mel(o.fmax_hz);
  std::vector<double> edges(o.bands + 2);
  for (int i = 0; i < o.bands + 2; ++i) edges[i] = mel_to_hz(lo + (hi - lo) * i / (o.bands + 1));
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(o.bands, bins);
  for (int b = 0; b < o.bands; ++b) {
    const double left = edges[b], centre = edges[b + 1], right = edges[b + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      if (f > left && f < centre) fb(b, k) = (f - left) / (centre - left);
      else if (f >= centre && f < right) fb(b, k) = (right - f) / (right - centre);
    }
    // Narrow low bands can fall between bin centres.
    if (fb.row(b).sum() == 0.0) {
      const int k = std::clamp(static_cast<int>(std::lround(centre / bin_hz)), 0, bins - 1);
      fb(b, k) = 1.0;
    }
  }
  return fb;
}

}  // namespace

Mono align_and_sum(const BinauralBuffer& clip) {
  Mono out(clip.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5f * (clip.left[i] + clip.right[i]);
  return out;
}

SpectralEmbeddingProvider::SpectralEmbeddingProvider(const SpectralProviderOptions& opts)
    : opts_(opts) {
  if (opts_.bands < 2 || opts_.contrast_groups < 1 || opts_.bands % opts_.contrast_groups != 0) {
    throw ConfigError("band count must be a multiple of the contrast group count");
  }
  if (opts_.frame_len < 16 || opts_.frame_len > opts_.fft_len || opts_.frame_hop < 1) {
    throw ConfigError("invalid provider framing");
  }
  frame_window_.resize(opts_.frame_len);
  for (int i = 0; i < opts_.frame_len; ++i) {
    frame_window_[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * M_PI * i / opts_.frame_len));
  }
  mel_ = mel_filterbank(opts_);

  Rng rng(opts_.projection_seed);
  Eigen::MatrixXd g(dsp::kEmbeddingDim, feature_dim());
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  projection_ = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

std::string SpectralEmbeddingProvider::descriptor() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "spectral-v1(bands=%d,contrast=%d,seed=%llu)", opts_.bands,
                opts_.contrast_groups, static_cast<unsigned long long>(opts_.projection_seed));
  return buf;
}

std::vector<double> SpectralEmbeddingProvider::features(std::span<const float> window) const {
  const int B = opts_.bands;
  const int bins = opts_.fft_len / 2 + 1;
  const std::size_t len = window.size();
  const std::size_t frames =
      len >= static_cast<std::size_t>(opts_.frame_len)
          ? (len - opts_.frame_len) / opts_.frame_hop + 1
          : 1;

  dsp::RealFft fft(opts_.fft_len);
  std::vector<float> buf(opts_.fft_len);
  std::vector<std::complex<float>> spec(bins);
  Eigen::VectorXd power(bins);
  Eigen::MatrixXd logs(B, frames);  // log band-energy ratios per frame
  std::vector<double> energy(frames);

  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0f);
    const std::size_t start = t * opts_.frame_hop;
    for (int i = 0; i < opts_.frame_len && start + i < len; ++i) {
      buf[i] = window[start + i] * frame_window_[i];
    }
    fft.forward(buf, spec);
    for (int k = 0; k < bins; ++k) power[k] = std::norm(std::complex<double>(spec[k]));
    const Eigen::VectorXd e = mel_ * power;
    energy[t] = e.sum();
    for (int b = 0; b < B; ++b) {
      logs(b, t) = energy[t] > kSilence ? std::log(e[b] / energy[t] + kRelativeFloor)
                                        : std::log(kRelativeFloor);
    }
  }

  // Active frames lie within a fixed range of the loudest one, so the
  // selection does not depend on input gain.
  const double peak = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> active;
  for (std::size_t t = 0; t < frames; ++t) {
    if (peak > kSilence && energy[t] >= peak * kActiveRange) active.push_back(t);
  }

  std::vector<double> f(feature_dim(), 0.0);
  if (active.empty()) return f;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(B);
  for (auto t : active) mean += logs.col(t);
  mean /= static_cast<double>(active.size());
  const double centre = mean.mean();
  for (int b = 0; b < B; ++b) f[b] = mean[b] - centre;

  std::size_t pairs = 0;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(B);
  for (std::size_t i = 1; i < active.size(); ++i) {
    if (active[i] != active[i - 1] + 1) continue;
    delta += (logs.col(active[i]) - logs.col(active[i - 1])).cwiseAbs();
    ++pairs;
  }
  if (pairs > 0) {
    for (int b = 0; b < B; ++b) f[B + b] = delta[b] / pairs;
  }

  const int G = opts_.contrast_groups, per = B / G;
  for (int g = 0; g < G; ++g) {
    double acc = 0.0;
    for (auto t : active) {
      const auto seg = logs.col(t).segment(g * per, per);
      acc += seg.maxCoeff() - seg.minCoeff();
    }
    f[2 * B + g] = acc / active.size();
  }

  for (auto [lo, hi] : {std::pair{0, B}, std::pair{B, 2 * B}, std::pair{2 * B, 2 * B + G}}) {
    double n2 = 0.0;
    for (int i = lo; i < hi; ++i) n2 += f[i] * f[i];
    if (n2 > 1e-24) {
      const double inv = 1.0 / std::sqrt(n2);
      for (int i = lo; i < hi; ++i) f[i] *= inv;
    }
  }
  return f;
}

std::vector<float> SpectralEmbeddingProvider::embed(std::span<const float> window) const {
  const auto f = features(window);
  const Eigen::VectorXd y =
      projection_ * Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  std::vector<float> out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = static_cast<float>(y[i]);
  return out;
}

std::unique_ptr<EmbeddingProvider> default_spectral_provider() {
  return std::make_unique<SpectralEmbeddingProvider>();
}

std::size_t window_count(std::size_t len, std::size_t window, std::size_t hop) {
  if (window == 0 || hop == 0 || len < window) return 0;
  return (len - window) / hop + 1;
}

dsp::SpeakerEmbedding embed_enrollment(const BinauralBuffer& clip,
                                       const EmbeddingProvider& provider, double window_s,
                                       double hop_s) {
  if (!(window_s > 0.0) || !(hop_s > 0.0)) throw ConfigError("window and hop must be > 0");
  const auto window = static_cast<std::size_t>(std::lround(window_s * kSampleRate));
  const auto hop = static_cast<std::size_t>(std::lround(hop_s * kSampleRate));
  const Mono mono = align_and_sum(clip);
  const std::size_t n = window_count(mono.size(), window, hop);
  if (n == 0) {
    throw DataError("enrollment clip too short: " + std::to_string(mono.size()) +
                    " samples, need at least " + std::to_string(window));
  }
  std::vector<double> acc(dsp::kEmbeddingDim, 0.0);
  for (std::size_t w = 0; w < n; ++w) {
    const auto v = provider.embed(std::span(mono).subspan(w * hop, window));
    if (v.size() != acc.size()) {
      throw SizeMismatch("provider returned " + std::to_string(v.size()) + " values");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw DegenerateEmbedding("provider returned non-finite values");
      acc[i] += v[i];
    }
  }
  std::vector<float> mean(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) mean[i] = static_cast<float>(acc[i] / n);
  return dsp::SpeakerEmbedding::from_raw(std::move(mean));
}

std::string audio_hash(const BinauralBuffer& clip) {
  std::uint64_t h = fnv1a64(clip.left.data(), clip.left.size() * sizeof(float));
  h = fnv1a64(clip.right.data(), clip.right.size() * sizeof(float), h);
  return to_hex(h);
}

double enrollment_quality(const dsp::SpeakerEmbedding& estimate,
                          const dsp::SpeakerEmbedding& reference) {
  return dsp::cosine_similarity(estimate, reference);
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * (s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (s[hi] - s[lo]) * (pos - lo);
}

}  // namespace

QualitySummary summarize_quality(const std::vector<double>& similarities) {
  QualitySummary s;
  s.count = similarities.size();
  if (similarities.empty()) return s;
  std::vector<double> v = similarities;
  std::sort(v.begin(), v.end());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  s.min = v.front();
  s.max = v.back();
  s.p10 = quantile_sorted(v, 0.10);
  s.p50 = quantile_sorted(v, 0.50);
  s.p90 = quantile_sorted(v, 0.90);
  return s;
}

std::string format_quality_table(const QualitySummary& s) {
  char row[256];
  std::snprintf(row, sizeof(row), "| %zu | %.4f | %.4f | %.4f | %.4f | %.4f | %.4f |\n", s.count,
                s.mean, s.min, s.p10, s.p50, s.p90, s.max);
  return std::string("| count | mean | min | p10 | p50 | p90 | max |\n"
                     "|---|---|---|---|---|---|---|\n") +
         row;
}

}  // namespace tsh::enroll
