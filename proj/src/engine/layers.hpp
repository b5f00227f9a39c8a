#pragma once

// Shared numeric primitives for the streaming and offline paths.

#include <cmath>

#include "tsh/engine/attention.hpp"

namespace tsh::engine::detail {

inline constexpr float kNormEps = 1e-5f;

/// Layer norm over the rows of every column (channel norm per TF bin).
inline void channel_layer_norm(const Mat& x, const Vec& gamma, const Vec& beta, Mat& out) {
  out.resize(x.rows(), x.cols());
  const float inv_n = 1.0f / static_cast<float>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.col(j).array();
    const float mean = col.sum() * inv_n;
    const float var = (col - mean).square().sum() * inv_n;
    const float inv = 1.0f / std::sqrt(var + kNormEps);
    out.col(j).array() = (col - mean) * inv * gamma.array() + beta.array();
  }
}

/// Layer norm over a whole (C x F) block with elementwise affine.
template <class Block, class Affine>
inline void block_layer_norm(Block&& blk, const Affine& gamma, const Affine& beta) {
  const double n = static_cast<double>(blk.size());
  const float mean = static_cast<float>(static_cast<double>(blk.sum()) / n);
  const double sq = static_cast<double>((blk.array() - mean).square().sum());
  const float inv = static_cast<float>(1.0 / std::sqrt(sq / n + kNormEps));
  blk.array() = (blk.array() - mean) * inv * gamma.array() + beta.array();
}

template <class Block>
inline void prelu(Block&& x, float slope) {
  x = (x.array() >= 0.0f).select(x, x * slope);
}

/// PyTorch gate order (i, f, g, o). `gates` holds pre-activations and is
/// used as scratch.
template <class Gates, class Cell, class Hidden>
inline void lstm_cell(Gates& gates, Cell& c, Hidden& h) {
  const auto H = c.rows();
  gates.topRows(2 * H).array() = gates.topRows(2 * H).array().logistic();
  gates.middleRows(2 * H, H).array() = gates.middleRows(2 * H, H).array().tanh();
  gates.bottomRows(H).array() = gates.bottomRows(H).array().logistic();
  c.array() = gates.middleRows(H, H).array() * c.array() +
              gates.topRows(H).array() * gates.middleRows(2 * H, H).array();
  h.array() = gates.bottomRows(H).array() * c.array().tanh();
}

}  // namespace tsh::engine::detail
