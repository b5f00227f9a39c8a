#pragma once

#include <span>
#include <vector>

namespace tsh::dsp {

inline constexpr int kEmbeddingDim = 256;

/// Unit-norm speaker identity vector.
class SpeakerEmbedding {
 public:
  SpeakerEmbedding() = default;

  /// L2-normalises `raw`. Throws DegenerateEmbedding when |raw| < min_norm
  /// and SizeMismatch when the dimension is not 256.
  static SpeakerEmbedding from_raw(std::vector<float> raw, double min_norm = 1e-6);
  /// Keeps `values` bit-exact; throws DataError unless |norm - 1| <= tol.
  static SpeakerEmbedding from_unit(std::vector<float> values, double tol = 1e-5);

  std::span<const float> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double norm() const;

  bool operator==(const SpeakerEmbedding&) const = default;

 private:
  std::vector<float> values_;
};

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b);

}  // namespace tsh::dsp
