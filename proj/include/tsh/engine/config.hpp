#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "tsh/dsp/stft.hpp"

namespace tsh::engine {

/// Hyperparameters of the causal grid network.
struct ModelConfig {
  int emb_dim = 64;       ///< D
  int num_blocks = 3;     ///< B
  int hidden = 64;        ///< H
  int unfold_kernel = 1;  ///< I
  int unfold_stride = 1;  ///< J
  int heads = 4;          ///< L
  int head_dim = 6;       ///< E
  int attn_window = 50;   ///< frames attended per query, newest included
  int cond_dim = 256;
  int cond_after_block = 0;  ///< conditioning multiplies the output of this block
  dsp::AudioParams audio;

  int freq_bins() const { return audio.bins(); }
  int input_channels() const { return 4; }  ///< re/im of left and right
  int value_dim() const { return emb_dim / heads; }

  /// Throws ConfigError when the configuration cannot stream.
  void validate() const;
  /// FNV-1a over the canonical JSON form, hex encoded.
  std::string hash() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace tsh::engine
