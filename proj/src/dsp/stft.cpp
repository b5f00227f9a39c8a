#include "tsh/dsp/stft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tsh::dsp {

AudioParams AudioParams::from_chunk_ms(double chunk_ms, double lookahead_ms) {
  AudioParams p;
  p.chunk_len = static_cast<int>(std::lround(chunk_ms * kSampleRate / 1000.0));
  p.lookahead_len = static_cast<int>(std::lround(lookahead_ms * kSampleRate / 1000.0));
  p.hop_len = p.chunk_len;
  p.win_len = p.chunk_len + p.lookahead_len;
  p.fft_len = p.win_len;
  p.validate();
  return p;
}

void AudioParams::validate() const {
  if (sample_rate != kSampleRate) {
    throw ConfigError("sample rate must be 16000 Hz, got " + std::to_string(sample_rate));
  }
  if (chunk_len <= 0 || lookahead_len <= 0) throw ConfigError("chunk and lookahead must be > 0");
  if (hop_len != chunk_len) throw ConfigError("hop_len must equal chunk_len");
  if (win_len != fft_len) throw ConfigError("win_len must equal fft_len");
  if (lookahead_len != win_len - hop_len) {
    throw ConfigError("lookahead_len must equal win_len - hop_len");
  }
  if (fft_len % 2 != 0) throw ConfigError("fft_len must be even");
}

std::vector<float> sqrt_hann_window(int n) {
  std::vector<float> w(n);
  for (int i = 0; i < n; ++i) {
    const double h = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
    w[i] = static_cast<float>(std::sqrt(h));
  }
  return w;
}

std::vector<float> rectangular_window(int n) { return std::vector<float>(n, 1.0f); }

std::vector<float> synthesis_window(std::span<const float> analysis, int hop) {
  const int n = static_cast<int>(analysis.size());
  std::vector<float> out(n);
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int j = i % hop; j < n; j += hop) norm += double(analysis[j]) * analysis[j];
    if (norm <= 0.0) throw ConfigError("analysis window does not cover every sample at this hop");
    out[i] = static_cast<float>(analysis[i] / norm);
  }
  return out;
}

// ---------------------------------------------------------------------------

StftAnalyzer::StftAnalyzer(const AudioParams& params)
    : StftAnalyzer(params, sqrt_hann_window(params.win_len)) {}

StftAnalyzer::StftAnalyzer(const AudioParams& params, std::vector<float> window)
    : params_(params),
      window_(std::move(window)),
      tail_(params.tail_len(), 0.0f),
      scratch_(params.fft_len, 0.0f),
      fft_(params.fft_len) {
  params_.validate();
  if (static_cast<int>(window_.size()) != params_.win_len) {
    throw SizeMismatch("window length must equal win_len");
  }
}

void StftAnalyzer::push(std::span<const float> chunk, std::span<Complex> frame) {
  const int hop = params_.hop_len;
  const int tail = params_.tail_len();
  if (static_cast<int>(chunk.size()) != hop) {
    throw SizeMismatch("stft chunk must have " + std::to_string(hop) + " samples, got " +
                       std::to_string(chunk.size()));
  }
  for (int i = 0; i < tail; ++i) scratch_[i] = tail_[i] * window_[i];
  for (int i = 0; i < hop; ++i) scratch_[tail + i] = chunk[i] * window_[tail + i];
  fft_.forward(scratch_, frame);
  // New tail = last `tail` samples of [tail ++ chunk].
  if (hop >= tail) {
    std::copy(chunk.end() - tail, chunk.end(), tail_.begin());
  } else {
    std::copy(tail_.begin() + hop, tail_.end(), tail_.begin());
    std::copy(chunk.begin(), chunk.end(), tail_.end() - hop);
  }
}

SpectralFrame StftAnalyzer::push(std::span<const float> chunk) {
  SpectralFrame frame(params_.bins());
  push(chunk, frame);
  return frame;
}

void StftAnalyzer::reset() { std::fill(tail_.begin(), tail_.end(), 0.0f); }

// ---------------------------------------------------------------------------

IstftSynthesizer::IstftSynthesizer(const AudioParams& params)
    : IstftSynthesizer(params, sqrt_hann_window(params.win_len)) {}

IstftSynthesizer::IstftSynthesizer(const AudioParams& params,
                                   std::span<const float> analysis_window)
    : params_(params),
      synth_window_(synthesis_window(analysis_window, params.hop_len)),
      tail_(params.tail_len(), 0.0f),
      next_(params.tail_len(), 0.0f),
      scratch_(params.fft_len, 0.0f),
      contrib_(params.win_len, 0.0f),
      fft_(params.fft_len) {
  params_.validate();
}

void IstftSynthesizer::synthesize(std::span<const Complex> frame, std::span<float> contrib) {
  if (static_cast<int>(contrib.size()) != params_.win_len) {
    throw SizeMismatch("synthesis buffer must have win_len samples");
  }
  fft_.inverse(frame, scratch_);
  for (int i = 0; i < params_.win_len; ++i) contrib[i] = scratch_[i] * synth_window_[i];
}

void IstftSynthesizer::pop(std::span<const float> contrib, std::span<float> out) {
  const int hop = params_.hop_len;
  const int tail = params_.tail_len();
  if (static_cast<int>(contrib.size()) != params_.win_len ||
      static_cast<int>(out.size()) != hop) {
    throw SizeMismatch("istft pop: expected win_len contribution and hop_len output");
  }
  // Output sample i of this hop = tail (from earlier frames) + this frame.
  for (int i = 0; i < hop; ++i) {
    const float prev = i < tail ? tail_[i] : 0.0f;
    out[i] = prev + contrib[i];
  }
  // Remaining overlap: earlier tail beyond hop (only when tail > hop) + new frame end.
  for (int i = 0; i < tail; ++i) {
    const int src = hop + i;
    const float prev = src < tail ? tail_[src] : 0.0f;
    next_[i] = prev + contrib[src];
  }
  std::copy(next_.begin(), next_.end(), tail_.begin());
}

void IstftSynthesizer::push_frame(std::span<const Complex> frame, std::span<float> out) {
  synthesize(frame, contrib_);
  pop(contrib_, out);
}

void IstftSynthesizer::reset() { std::fill(tail_.begin(), tail_.end(), 0.0f); }

// ---------------------------------------------------------------------------

std::vector<SpectralFrame> stft_offline(std::span<const float> signal, const AudioParams& params,
                                        std::span<const float> window) {
  params.validate();
  const int hop = params.hop_len;
  const int tail = params.tail_len();
  const std::size_t frames = (signal.size() + hop - 1) / hop;
  std::vector<float> padded(tail + frames * hop, 0.0f);
  std::copy(signal.begin(), signal.end(), padded.begin() + tail);

  RealFft fft(params.fft_len);
  std::vector<float> buf(params.fft_len, 0.0f);
  std::vector<SpectralFrame> out(frames, SpectralFrame(params.bins()));
  for (std::size_t m = 0; m < frames; ++m) {
    const float* x = padded.data() + m * hop;
    for (int i = 0; i < params.win_len; ++i) buf[i] = x[i] * window[i];
    fft.forward(buf, out[m]);
  }
  return out;
}

std::vector<SpectralFrame> stft_offline(std::span<const float> signal, const AudioParams& params) {
  const auto w = sqrt_hann_window(params.win_len);
  return stft_offline(signal, params, w);
}

std::vector<float> istft_offline(std::span<const SpectralFrame> frames, const AudioParams& params,
                                 std::span<const float> analysis_window) {
  params.validate();
  const int hop = params.hop_len;
  const auto synth = synthesis_window(analysis_window, hop);
  RealFft fft(params.fft_len);
  std::vector<float> acc(frames.size() * hop + params.tail_len(), 0.0f);
  std::vector<float> buf(params.fft_len);
  for (std::size_t m = 0; m < frames.size(); ++m) {
    fft.inverse(frames[m], buf);
    float* y = acc.data() + m * hop;
    for (int i = 0; i < params.win_len; ++i) y[i] += buf[i] * synth[i];
  }
  acc.resize(frames.size() * hop);
  return acc;
}

std::vector<float> istft_offline(std::span<const SpectralFrame> frames, const AudioParams& params) {
  const auto w = sqrt_hann_window(params.win_len);
  return istft_offline(frames, params, w);
}

}  // namespace tsh::dsp
