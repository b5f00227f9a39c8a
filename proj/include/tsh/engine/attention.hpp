#pragma once

#include <vector>

#include <Eigen/Core>

namespace tsh::engine {

using Mat = Eigen::MatrixXf;
using Vec = Eigen::VectorXf;
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Ring buffer holding the keys and values of the last `window` frames for
/// every head. Keys of one head/frame are flattened (E x F) vectors.
class KvCache {
 public:
  KvCache() = default;
  KvCache(int heads, int key_len, int value_len, int window);

  /// Stores one frame; column h of `k`/`v` belongs to head h. Overwrites the
  /// oldest frame once `window` frames are held.
  void push(const Mat& k, const Mat& v);
  void reset();

  int heads() const { return heads_; }
  int key_len() const { return key_len_; }
  int value_len() const { return value_len_; }
  int window() const { return window_; }
  int filled() const { return filled_; }
  std::size_t bytes() const;

  const Mat& keys(int head) const { return keys_[head]; }
  const Mat& values(int head) const { return values_[head]; }

  /// Same-shape copy without reallocation.
  void copy_from(const KvCache& o);

 private:
  int heads_ = 0, key_len_ = 0, value_len_ = 0, window_ = 0;
  int filled_ = 0, next_ = 0;
  std::vector<Mat> keys_;    // key_len x window
  std::vector<Mat> values_;  // value_len x window
};

/// One streaming step: appends (k_new, v_new) to the cache, then lets the
/// newest query attend over the cached frames (at most `window`, newest
/// included). Scores are scaled by 1/sqrt(key_len). Shapes: q, k_new are
/// key_len x heads; v_new and `out` are value_len x heads.
void causal_windowed_attention(const Mat& q, const Mat& k_new, const Mat& v_new, KvCache& cache,
                               Mat& out);

/// Offline oracle: q/k per head are key_len x T, v value_len x T. Frame t
/// attends to frames max(0, t - window + 1) .. t.
std::vector<Mat> windowed_attention_offline(const std::vector<Mat>& q, const std::vector<Mat>& k,
                                            const std::vector<Mat>& v, int window);

/// Weights of the full attention sublayer of one grid block.
struct AttentionWeights {
  int heads = 0, head_dim = 0, value_dim = 0, freq_bins = 0, window = 0;
  RowMat wq, wk, wv, wp;  // [L*E, D], [L*E, D], [D, D], [D, D]
  Vec bq, bk, bv, bp;
  Vec aq, ak, av;         // PReLU slope per head
  Vec ap;                 // single PReLU slope after the projection
  RowMat q_norm_w, q_norm_b, k_norm_w, k_norm_b;  // [L*E, F]
  RowMat v_norm_w, v_norm_b, p_norm_w, p_norm_b;  // [D, F]

  // Column-major copies of the norm affines, filled by prepare().
  Mat qn_w, qn_b, kn_w, kn_b, vn_w, vn_b, pn_w, pn_b;
  void prepare();
};

/// Full sublayer over T frames of z (D x T*F, frame-major columns):
/// Q/K/V projection, per-head PReLU and (C, F) layer norm, windowed
/// attention, output projection. Returns the residual branch (without z).
/// With a cache the frames are streamed through it; without one the
/// explicit-window oracle is used.
Mat attention_sublayer(const AttentionWeights& w, const Mat& z, int frames, KvCache* cache);

}  // namespace tsh::engine
