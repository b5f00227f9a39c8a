#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsh/common.hpp"
#include "tsh/dsp/embedding.hpp"

namespace tsh::enroll {

inline constexpr double kDefaultWindowS = 1.0;
inline constexpr double kDefaultHopS = 0.5;

/// Delay-and-process front end for a target straight ahead: the direct path
/// reaches both ears at lag 0, so the channels are averaged.
Mono align_and_sum(const BinauralBuffer& clip);

/// Seam for a speaker-embedding network: maps one mono window to a raw
/// 256-d vector. Implementations must be deterministic and reentrant.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string descriptor() const = 0;
  virtual std::vector<float> embed(std::span<const float> window) const = 0;
};

struct SpectralProviderOptions {
  int bands = 64;
  int contrast_groups = 8;  ///< consecutive band groups for peak/valley contrast
  int frame_len = 640;      ///< 40 ms
  int frame_hop = 160;      ///< 10 ms
  int fft_len = 1024;
  double fmin_hz = 50.0;
  double fmax_hz = 4000.0;
  std::uint64_t projection_seed = 0x5eedULL;
};

/// Deterministic stand-in for a trained d-vector network. Per window:
/// band-centred log mel energies, mean absolute temporal deltas per band and
/// per-group spectral contrast over frames within 30 dB of the loudest one.
/// Each feature group is scaled to unit norm, then mapped to 256 dims by a
/// seeded matrix with orthonormal columns. All features are invariant to
/// input gain.
class SpectralEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit SpectralEmbeddingProvider(const SpectralProviderOptions& opts = {});

  std::string descriptor() const override;
  std::vector<float> embed(std::span<const float> window) const override;

  /// Unprojected feature vector (bands * 2 + contrast_groups values).
  std::vector<double> features(std::span<const float> window) const;
  int feature_dim() const { return 2 * opts_.bands + opts_.contrast_groups; }
  const Eigen::MatrixXd& projection() const { return projection_; }

 private:
  SpectralProviderOptions opts_;
  std::vector<float> frame_window_;
  Eigen::MatrixXd mel_;         ///< bands x (fft_len/2 + 1)
  Eigen::MatrixXd projection_;  ///< 256 x feature_dim, orthonormal columns
};

std::unique_ptr<EmbeddingProvider> default_spectral_provider();

/// floor((len - window) / hop) + 1, or 0 when len < window.
std::size_t window_count(std::size_t len, std::size_t window, std::size_t hop);

/// Aligns and sums the clip, applies the provider per window, averages the
/// raw vectors and normalises. Throws DataError when the clip is shorter than
/// one window and DegenerateEmbedding when the mean vector norm is < 1e-6.
dsp::SpeakerEmbedding embed_enrollment(const BinauralBuffer& clip,
                                       const EmbeddingProvider& provider,
                                       double window_s = kDefaultWindowS,
                                       double hop_s = kDefaultHopS);

/// FNV-1a hex over the raw float samples of both channels.
std::string audio_hash(const BinauralBuffer& clip);

/// Cosine similarity between an estimated and a reference embedding.
double enrollment_quality(const dsp::SpeakerEmbedding& estimate,
                          const dsp::SpeakerEmbedding& reference);

struct QualitySummary {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double p10 = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

QualitySummary summarize_quality(const std::vector<double>& similarities);
/// Two-row markdown table with fixed columns.
std::string format_quality_table(const QualitySummary& s);

}  // namespace tsh::enroll
