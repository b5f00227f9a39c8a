#include "tsh/dsp/embedding.hpp"

#include <cmath>

#include "tsh/common.hpp"
#include "tsh/dsp/metrics.hpp"

namespace tsh::dsp {

SpeakerEmbedding SpeakerEmbedding::from_raw(std::vector<float> raw, double min_norm) {
  if (raw.size() != static_cast<std::size_t>(kEmbeddingDim)) {
    throw SizeMismatch("speaker embedding must have 256 values, got " +
                       std::to_string(raw.size()));
  }
  double n2 = 0.0;
  for (float v : raw) {
    if (!std::isfinite(v)) throw DegenerateEmbedding("speaker embedding has non-finite values");
    n2 += double(v) * v;
  }
  const double n = std::sqrt(n2);
  if (n < min_norm) {
    throw DegenerateEmbedding("speaker embedding norm " + std::to_string(n) +
                              " below threshold; enrollment carried no usable identity");
  }
  SpeakerEmbedding e;
  e.values_.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) e.values_[i] = static_cast<float>(raw[i] / n);
  return e;
}

SpeakerEmbedding SpeakerEmbedding::from_unit(std::vector<float> values, double tol) {
  if (values.size() != static_cast<std::size_t>(kEmbeddingDim)) {
    throw SizeMismatch("speaker embedding must have 256 values, got " +
                       std::to_string(values.size()));
  }
  SpeakerEmbedding e;
  e.values_ = std::move(values);
  const double n = e.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > tol) {
    throw DataError("speaker embedding is not unit norm (norm " + std::to_string(n) + ")");
  }
  return e;
}

double SpeakerEmbedding::norm() const {
  double n2 = 0.0;
  for (float v : values_) n2 += double(v) * v;
  return std::sqrt(n2);
}

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
  return cosine_similarity(a.values(), b.values());
}

}  // namespace tsh::dsp
