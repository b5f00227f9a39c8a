#pragma once

#include <complex>
#include <span>
#include <vector>

#include "tsh/common.hpp"
#include "tsh/dsp/fft.hpp"

namespace tsh::dsp {

/// Framing parameters shared by the STFT, the scheduler and the model.
/// Defaults: 8 ms chunks, 4 ms lookahead, 12 ms window, 97 bins.
struct AudioParams {
  int sample_rate = kSampleRate;
  int chunk_len = 128;
  int lookahead_len = 64;
  int fft_len = 192;
  int win_len = 192;
  int hop_len = 128;

  int bins() const { return fft_len / 2 + 1; }
  int tail_len() const { return win_len - hop_len; }
  double chunk_ms() const { return 1000.0 * chunk_len / sample_rate; }
  double lookahead_ms() const { return 1000.0 * lookahead_len / sample_rate; }

  /// Chunk length in ms with the 4 ms lookahead kept fixed.
  static AudioParams from_chunk_ms(double chunk_ms, double lookahead_ms = 4.0);
  void validate() const;

  bool operator==(const AudioParams&) const = default;
};

using Complex = std::complex<float>;
using SpectralFrame = std::vector<Complex>;

std::vector<float> sqrt_hann_window(int n);
std::vector<float> rectangular_window(int n);

/// Least-squares synthesis window for `analysis` at the given hop: for every
/// sample the overlapping analysis*synthesis products sum to one.
std::vector<float> synthesis_window(std::span<const float> analysis, int hop);

/// Streaming analysis. Holds the last win_len - hop_len input samples (zero
/// at start) and emits one frame per hop_len-sample chunk.
class StftAnalyzer {
 public:
  explicit StftAnalyzer(const AudioParams& params = {});
  StftAnalyzer(const AudioParams& params, std::vector<float> window);

  void push(std::span<const float> chunk, std::span<Complex> frame);
  SpectralFrame push(std::span<const float> chunk);
  void reset();

  const AudioParams& params() const { return params_; }
  std::span<const float> tail() const { return tail_; }
  std::span<float> tail() { return tail_; }

 private:
  AudioParams params_;
  std::vector<float> window_;
  std::vector<float> tail_;
  std::vector<float> scratch_;
  RealFft fft_;
};

/// Streaming overlap-add synthesis. Each pop() emits exactly hop_len final
/// samples and keeps the trailing win_len - hop_len samples for the next frame.
class IstftSynthesizer {
 public:
  explicit IstftSynthesizer(const AudioParams& params = {});
  IstftSynthesizer(const AudioParams& params, std::span<const float> analysis_window);

  /// Inverse transform of one frame times the synthesis window (win_len samples).
  void synthesize(std::span<const Complex> frame, std::span<float> contrib);
  /// Overlap-add a synthesised frame and emit the finished hop.
  void pop(std::span<const float> contrib, std::span<float> out);
  /// synthesize + pop.
  void push_frame(std::span<const Complex> frame, std::span<float> out);
  void reset();

  const AudioParams& params() const { return params_; }
  std::span<const float> tail() const { return tail_; }
  std::span<float> tail() { return tail_; }

 private:
  AudioParams params_;
  std::vector<float> synth_window_;
  std::vector<float> tail_;
  std::vector<float> next_;
  std::vector<float> scratch_;
  std::vector<float> contrib_;
  RealFft fft_;
};

/// Offline framing equivalent to feeding `signal` through StftAnalyzer in
/// hop_len chunks (the last partial chunk zero-padded).
std::vector<SpectralFrame> stft_offline(std::span<const float> signal, const AudioParams& params,
                                        std::span<const float> window);
std::vector<SpectralFrame> stft_offline(std::span<const float> signal,
                                        const AudioParams& params = {});

/// Offline overlap-add; returns frames.size() * hop_len samples, matching the
/// concatenated output of IstftSynthesizer.
std::vector<float> istft_offline(std::span<const SpectralFrame> frames, const AudioParams& params,
                                 std::span<const float> analysis_window);
std::vector<float> istft_offline(std::span<const SpectralFrame> frames,
                                 const AudioParams& params = {});

}  // namespace tsh::dsp
