#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsh/common.hpp"
#include "tsh/dsp/embedding.hpp"
#include "tsh/dsp/stft.hpp"
#include "tsh/engine/attention.hpp"
#include "tsh/engine/config.hpp"
#include "tsh/engine/weights.hpp"

namespace tsh::engine {

/// D x F tensor multiplied into the latent after the conditioned block.
struct Conditioning {
  Mat tensor;
};

struct ChunkTimings {
  std::int64_t index = 0;
  double inference_ms = 0.0;
  double copy_ms = 0.0;

  double total_ms() const { return inference_ms + copy_ms; }
  bool operator==(const ChunkTimings&) const = default;
};

/// How process_chunk updates state: in place, or into a second buffer set
/// that is then copied back (the input/output-buffer deployment pattern).
enum class StateUpdate { InPlace, Copy };

struct BlockState {
  Mat inter_h;  ///< H x F
  Mat inter_c;  ///< H x F
  KvCache kv;
};

/// Every cache needed to make chunked inference equal offline inference.
/// Created by Model::make_state(); a default-constructed state is
/// uninitialised and rejected by process_chunk.
class StreamState {
 public:
  StreamState();
  ~StreamState();
  StreamState(StreamState&&) noexcept;
  StreamState& operator=(StreamState&&) noexcept;

  bool initialized() const { return initialized_; }
  std::int64_t chunks_processed() const { return chunk_index_; }
  /// Zeroes every buffer; the next chunk behaves like the first one.
  void reset();
  /// Bytes held in cache buffers.
  std::size_t bytes() const;
  /// Copies every cache buffer from a state of the same shape.
  void copy_buffers_from(const StreamState& o);

 private:
  friend class Model;
  explicit StreamState(const ModelConfig& config);

  bool initialized_ = false;
  std::int64_t chunk_index_ = 0;
  dsp::StftAnalyzer stft_left_;
  dsp::StftAnalyzer stft_right_;
  Mat input_cache_;   ///< 4 x 2F: input features of frames t-2, t-1
  std::vector<BlockState> blocks_;
  Mat deconv_cache_;  ///< 18 x 2F: deconvolution taps of frames t-2, t-1
  dsp::IstftSynthesizer istft_;
  std::unique_ptr<StreamState> staging_;  ///< second buffer set for StateUpdate::Copy
  bool staging_synced_ = false;
};

/// Causal grid network: spectral input conv, B grid blocks (intra-frame
/// BiLSTM over frequency, per-bin LSTM over time, windowed multi-head
/// attention), conditioning multiply, causal deconv to a complex mask on
/// the left-ear spectrum.
class Model {
 public:
  /// Deterministic random initialisation.
  static Model from_seed(const ModelConfig& config, std::uint64_t seed);
  /// Throws ShapeMismatch on a wrong shape and DataError listing missing
  /// and unknown tensor names.
  static Model from_archive(const WeightArchive& archive);

  WeightArchive to_archive() const;
  const ModelConfig& config() const { return config_; }
  std::int64_t parameter_count() const;
  /// Names and shapes in canonical order.
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> parameter_shapes() const;

  Conditioning condition(const dsp::SpeakerEmbedding& embedding) const;
  StreamState make_state() const;

  /// Consumes hop_len samples per ear and writes hop_len final output
  /// samples; the output timeline is the input delayed by lookahead_len.
  /// Throws NumericFault with the chunk index on non-finite output.
  ChunkTimings process_chunk(StreamState& state, std::span<const float> left,
                             std::span<const float> right, const Conditioning& cond,
                             std::span<float> out,
                             StateUpdate mode = StateUpdate::InPlace) const;

  /// Same computation over the whole signal without stream caches.
  /// Returns ceil(N / hop) * hop samples on the streaming timeline.
  Mono offline_causal_forward(const BinauralBuffer& input, const Conditioning& cond) const;

  struct Lstm {
    RowMat w_ih, w_hh;
    Vec b_ih, b_hh;
    Vec bias;   // b_ih + b_hh
    Mat w_hh_c;  // column-major copy for the recurrent matrix-vector products
  };
  struct Block {
    Vec intra_norm_w, intra_norm_b;
    Lstm intra_fwd, intra_bwd;
    RowMat intra_lin_w;
    Vec intra_lin_b;
    Vec inter_norm_w, inter_norm_b;
    Lstm inter;
    RowMat inter_lin_w;
    Vec inter_lin_b;
    AttentionWeights attn;
    RowMat intra_ih;  // forward and reverse input weights stacked, [8H, D]
    Vec intra_bias;
  };

 private:
  explicit Model(const ModelConfig& config);
  template <class Self, class Fn>
  static void visit_parameters(Self& self, Fn&& fn);
  void prepare();

  Mat conv_in(const Mat& x_ext, int frames) const;
  void block_forward(const Block& blk, Mat& z, int frames, Mat& h, Mat& c, KvCache* kv) const;
  void apply_condition(Mat& z, int frames, const Conditioning& cond) const;
  Mat deconv_taps(const Mat& z) const;
  Mat assemble_mask(const Mat& taps_ext, int frames) const;

  ModelConfig config_;
  RowMat conv_in_w_;  // [D, 4*3*3]
  Vec conv_in_b_;
  std::vector<Block> blocks_;
  RowMat cond_w_;  // [D*F, cond_dim]
  Vec cond_b_;
  RowMat cond_norm_w_, cond_norm_b_;  // [D, F]
  RowMat deconv_w_;  // [D, 2*3*3]
  Vec deconv_b_;
  RowMat deconv_taps_w_;  // [18, D], derived
  dsp::AudioParams audio_;
};

/// Streams `input` chunk by chunk (zero-padding the last chunk) and returns
/// chunks * hop samples. With `flush`, extra zero chunks are fed so that
/// every input sample reaches the output.
Mono run_stream(const Model& model, const BinauralBuffer& input, const Conditioning& cond,
                bool flush = false, StateUpdate mode = StateUpdate::InPlace);

/// Streams with flush and removes the lookahead delay: output sample n is
/// the estimate for input sample n; length N.
Mono extract_aligned(const Model& model, const BinauralBuffer& input, const Conditioning& cond);

}  // namespace tsh::engine
