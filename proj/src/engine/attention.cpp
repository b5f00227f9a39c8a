#include "tsh/engine/attention.hpp"

#include <cmath>

#include "layers.hpp"
#include "tsh/common.hpp"

namespace tsh::engine {

KvCache::KvCache(int heads, int key_len, int value_len, int window)
    : heads_(heads), key_len_(key_len), value_len_(value_len), window_(window) {
  if (heads <= 0 || key_len <= 0 || value_len <= 0 || window <= 0) {
    throw ConfigError("KvCache dimensions must be positive");
  }
  keys_.assign(heads, Mat::Zero(key_len, window));
  values_.assign(heads, Mat::Zero(value_len, window));
}

void KvCache::push(const Mat& k, const Mat& v) {
  if (k.rows() != key_len_ || k.cols() != heads_ || v.rows() != value_len_ ||
      v.cols() != heads_) {
    throw SizeMismatch("KvCache::push: key/value shape does not match the cache");
  }
  for (int h = 0; h < heads_; ++h) {
    keys_[h].col(next_) = k.col(h);
    values_[h].col(next_) = v.col(h);
  }
  next_ = (next_ + 1) % window_;
  if (filled_ < window_) ++filled_;
}

void KvCache::reset() {
  for (auto& m : keys_) m.setZero();
  for (auto& m : values_) m.setZero();
  filled_ = 0;
  next_ = 0;
}

std::size_t KvCache::bytes() const {
  return sizeof(float) * static_cast<std::size_t>(heads_) * window_ * (key_len_ + value_len_);
}

void KvCache::copy_from(const KvCache& o) {
  for (int h = 0; h < heads_; ++h) {
    keys_[h] = o.keys_[h];
    values_[h] = o.values_[h];
  }
  filled_ = o.filled_;
  next_ = o.next_;
}

namespace {

// Softmax-weighted sum of the first n columns of `vals`.
template <class KeyBlock, class ValBlock, class Query, class Out>
void attend(const KeyBlock& keys, const ValBlock& vals, const Query& q, float scale, Out&& out) {
  Vec s = (keys.transpose() * q) * scale;
  s.array() = (s.array() - s.maxCoeff()).exp();
  s /= s.sum();
  out.noalias() = vals * s;
}

}  // namespace

void causal_windowed_attention(const Mat& q, const Mat& k_new, const Mat& v_new, KvCache& cache,
                               Mat& out) {
  if (q.rows() != cache.key_len() || q.cols() != cache.heads()) {
    throw SizeMismatch("attention query shape does not match the cache");
  }
  cache.push(k_new, v_new);
  const int n = cache.filled();
  const float scale = 1.0f / std::sqrt(static_cast<float>(cache.key_len()));
  out.resize(cache.value_len(), cache.heads());
  for (int h = 0; h < cache.heads(); ++h) {
    attend(cache.keys(h).leftCols(n), cache.values(h).leftCols(n), q.col(h), scale, out.col(h));
  }
}

std::vector<Mat> windowed_attention_offline(const std::vector<Mat>& q, const std::vector<Mat>& k,
                                            const std::vector<Mat>& v, int window) {
  std::vector<Mat> out;
  out.reserve(q.size());
  for (std::size_t h = 0; h < q.size(); ++h) {
    const auto T = q[h].cols();
    const float scale = 1.0f / std::sqrt(static_cast<float>(q[h].rows()));
    Mat o(v[h].rows(), T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const Eigen::Index first = std::max<Eigen::Index>(0, t - window + 1);
      const Eigen::Index n = t - first + 1;
      attend(k[h].middleCols(first, n), v[h].middleCols(first, n), q[h].col(t), scale, o.col(t));
    }
    out.push_back(std::move(o));
  }
  return out;
}

void AttentionWeights::prepare() {
  qn_w = q_norm_w;
  qn_b = q_norm_b;
  kn_w = k_norm_w;
  kn_b = k_norm_b;
  vn_w = v_norm_w;
  vn_b = v_norm_b;
  pn_w = p_norm_w;
  pn_b = p_norm_b;
}

namespace {

// Projection -> per-head PReLU -> per-head (C, F) layer norm, for T frames.
Mat project_heads(const RowMat& w, const Vec& b, const Vec& slopes, const Mat& gamma,
                  const Mat& beta, const Mat& z, int frames, int heads, int freq_bins) {
  Mat y = w * z;
  y.colwise() += b;
  const int rows = static_cast<int>(y.rows()) / heads;
  for (int t = 0; t < frames; ++t) {
    for (int h = 0; h < heads; ++h) {
      auto blk = y.block(h * rows, t * freq_bins, rows, freq_bins);
      detail::prelu(blk, slopes[h]);
      detail::block_layer_norm(blk, gamma.middleRows(h * rows, rows),
                               beta.middleRows(h * rows, rows));
    }
  }
  return y;
}

}  // namespace

Mat attention_sublayer(const AttentionWeights& w, const Mat& z, int frames, KvCache* cache) {
  const int L = w.heads;
  const int F = w.freq_bins;
  const int E = w.head_dim;
  const int Vd = w.value_dim;
  const Mat q = project_heads(w.wq, w.bq, w.aq, w.qn_w, w.qn_b, z, frames, L, F);
  const Mat k = project_heads(w.wk, w.bk, w.ak, w.kn_w, w.kn_b, z, frames, L, F);
  const Mat v = project_heads(w.wv, w.bv, w.av, w.vn_w, w.vn_b, z, frames, L, F);

  Mat attn(L * Vd, static_cast<Eigen::Index>(frames) * F);
  if (cache) {
    Mat qf(E * F, L), kf(E * F, L), vf(Vd * F, L), of;
    for (int t = 0; t < frames; ++t) {
      for (int h = 0; h < L; ++h) {
        Eigen::Map<Mat>(qf.col(h).data(), E, F) = q.block(h * E, t * F, E, F);
        Eigen::Map<Mat>(kf.col(h).data(), E, F) = k.block(h * E, t * F, E, F);
        Eigen::Map<Mat>(vf.col(h).data(), Vd, F) = v.block(h * Vd, t * F, Vd, F);
      }
      causal_windowed_attention(qf, kf, vf, *cache, of);
      for (int h = 0; h < L; ++h) {
        attn.block(h * Vd, t * F, Vd, F) = Eigen::Map<const Mat>(of.col(h).data(), Vd, F);
      }
    }
  } else {
    std::vector<Mat> qh(L, Mat(E * F, frames)), kh(L, Mat(E * F, frames)),
        vh(L, Mat(Vd * F, frames));
    for (int t = 0; t < frames; ++t) {
      for (int h = 0; h < L; ++h) {
        Eigen::Map<Mat>(qh[h].col(t).data(), E, F) = q.block(h * E, t * F, E, F);
        Eigen::Map<Mat>(kh[h].col(t).data(), E, F) = k.block(h * E, t * F, E, F);
        Eigen::Map<Mat>(vh[h].col(t).data(), Vd, F) = v.block(h * Vd, t * F, Vd, F);
      }
    }
    const auto oh = windowed_attention_offline(qh, kh, vh, w.window);
    for (int t = 0; t < frames; ++t) {
      for (int h = 0; h < L; ++h) {
        attn.block(h * Vd, t * F, Vd, F) = Eigen::Map<const Mat>(oh[h].col(t).data(), Vd, F);
      }
    }
  }

  Mat p = w.wp * attn;
  p.colwise() += w.bp;
  for (int t = 0; t < frames; ++t) {
    auto blk = p.middleCols(t * F, F);
    detail::prelu(blk, w.ap[0]);
    detail::block_layer_norm(blk, w.pn_w, w.pn_b);
  }
  return p;
}

}  // namespace tsh::engine
