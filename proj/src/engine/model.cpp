#include "tsh/engine/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "layers.hpp"

namespace tsh::engine {

namespace {

enum class Init { Uniform, One, Zero, Slope };

constexpr int kKernel = 3;  // time and frequency kernel of the input conv and output deconv
constexpr int kTaps = kKernel * kKernel;
constexpr float kPreluInit = 0.25f;

double elapsed_ms(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// StreamState

StreamState::StreamState() = default;
StreamState::~StreamState() = default;
StreamState::StreamState(StreamState&&) noexcept = default;
StreamState& StreamState::operator=(StreamState&&) noexcept = default;

StreamState::StreamState(const ModelConfig& config)
    : initialized_(true),
      stft_left_(config.audio),
      stft_right_(config.audio),
      istft_(config.audio) {
  const int F = config.freq_bins();
  input_cache_ = Mat::Zero(config.input_channels(), 2 * F);
  blocks_.resize(config.num_blocks);
  for (auto& b : blocks_) {
    b.inter_h = Mat::Zero(config.hidden, F);
    b.inter_c = Mat::Zero(config.hidden, F);
    b.kv = KvCache(config.heads, config.head_dim * F, config.value_dim() * F, config.attn_window);
  }
  deconv_cache_ = Mat::Zero(2 * kTaps, 2 * F);
}

void StreamState::reset() {
  stft_left_.reset();
  stft_right_.reset();
  input_cache_.setZero();
  for (auto& b : blocks_) {
    b.inter_h.setZero();
    b.inter_c.setZero();
    b.kv.reset();
  }
  deconv_cache_.setZero();
  istft_.reset();
  chunk_index_ = 0;
  staging_synced_ = false;
}

std::size_t StreamState::bytes() const {
  std::size_t n = stft_left_.tail().size() + stft_right_.tail().size() + input_cache_.size() +
                  deconv_cache_.size() + istft_.tail().size();
  std::size_t kv = 0;
  for (const auto& b : blocks_) {
    n += b.inter_h.size() + b.inter_c.size();
    kv += b.kv.bytes();
  }
  return n * sizeof(float) + kv;
}

void StreamState::copy_buffers_from(const StreamState& o) {
  if (blocks_.size() != o.blocks_.size() || input_cache_.size() != o.input_cache_.size()) {
    throw SizeMismatch("stream states have different shapes");
  }
  std::ranges::copy(o.stft_left_.tail(), stft_left_.tail().begin());
  std::ranges::copy(o.stft_right_.tail(), stft_right_.tail().begin());
  input_cache_ = o.input_cache_;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].inter_h = o.blocks_[i].inter_h;
    blocks_[i].inter_c = o.blocks_[i].inter_c;
    blocks_[i].kv.copy_from(o.blocks_[i].kv);
  }
  deconv_cache_ = o.deconv_cache_;
  std::ranges::copy(o.istft_.tail(), istft_.tail().begin());
  chunk_index_ = o.chunk_index_;
}

// ---------------------------------------------------------------------------
// Parameters

Model::Model(const ModelConfig& config) : config_(config), audio_(config.audio) {
  config_.validate();
  const int D = config.emb_dim, H = config.hidden, F = config.freq_bins();
  const int L = config.heads, E = config.head_dim, C = config.input_channels();
  conv_in_w_ = RowMat::Zero(D, C * kTaps);
  conv_in_b_ = Vec::Zero(D);
  auto lstm = [&](int in) {
    Lstm l;
    l.w_ih = RowMat::Zero(4 * H, in);
    l.w_hh = RowMat::Zero(4 * H, H);
    l.b_ih = Vec::Zero(4 * H);
    l.b_hh = Vec::Zero(4 * H);
    l.bias = Vec::Zero(4 * H);
    return l;
  };
  blocks_.resize(config.num_blocks);
  for (auto& b : blocks_) {
    b.intra_norm_w = Vec::Zero(D);
    b.intra_norm_b = Vec::Zero(D);
    b.intra_fwd = lstm(D);
    b.intra_bwd = lstm(D);
    b.intra_lin_w = RowMat::Zero(D, 2 * H);
    b.intra_lin_b = Vec::Zero(D);
    b.inter_norm_w = Vec::Zero(D);
    b.inter_norm_b = Vec::Zero(D);
    b.inter = lstm(D);
    b.inter_lin_w = RowMat::Zero(D, H);
    b.inter_lin_b = Vec::Zero(D);
    auto& a = b.attn;
    a.heads = L;
    a.head_dim = E;
    a.value_dim = config.value_dim();
    a.freq_bins = F;
    a.window = config.attn_window;
    a.wq = RowMat::Zero(L * E, D);
    a.wk = RowMat::Zero(L * E, D);
    a.wv = RowMat::Zero(D, D);
    a.wp = RowMat::Zero(D, D);
    a.bq = Vec::Zero(L * E);
    a.bk = Vec::Zero(L * E);
    a.bv = Vec::Zero(D);
    a.bp = Vec::Zero(D);
    a.aq = Vec::Zero(L);
    a.ak = Vec::Zero(L);
    a.av = Vec::Zero(L);
    a.ap = Vec::Zero(1);
    a.q_norm_w = RowMat::Zero(L * E, F);
    a.q_norm_b = RowMat::Zero(L * E, F);
    a.k_norm_w = RowMat::Zero(L * E, F);
    a.k_norm_b = RowMat::Zero(L * E, F);
    a.v_norm_w = RowMat::Zero(D, F);
    a.v_norm_b = RowMat::Zero(D, F);
    a.p_norm_w = RowMat::Zero(D, F);
    a.p_norm_b = RowMat::Zero(D, F);
  }
  cond_w_ = RowMat::Zero(static_cast<Eigen::Index>(D) * F, config.cond_dim);
  cond_b_ = Vec::Zero(static_cast<Eigen::Index>(D) * F);
  cond_norm_w_ = RowMat::Zero(D, F);
  cond_norm_b_ = RowMat::Zero(D, F);
  deconv_w_ = RowMat::Zero(D, 2 * kTaps);
  deconv_b_ = Vec::Zero(2);
}

template <class Self, class Fn>
void Model::visit_parameters(Self& self, Fn&& fn) {
  const auto& c = self.config_;
  const std::int64_t D = c.emb_dim, H = c.hidden, F = c.freq_bins(), L = c.heads,
                     E = c.head_dim, Vd = c.value_dim();
  const std::int64_t C = c.input_channels();
  using Shape = std::vector<std::int64_t>;

  fn("conv_in.weight", Shape{D, C, kKernel, kKernel}, self.conv_in_w_.data(), Init::Uniform,
     C * kTaps);
  fn("conv_in.bias", Shape{D}, self.conv_in_b_.data(), Init::Uniform, C * kTaps);

  auto lstm = [&](const std::string& p, auto& l, const std::string& suffix, std::int64_t in) {
    fn(p + ".weight_ih_l0" + suffix, Shape{4 * H, in}, l.w_ih.data(), Init::Uniform, H);
    fn(p + ".weight_hh_l0" + suffix, Shape{4 * H, H}, l.w_hh.data(), Init::Uniform, H);
    fn(p + ".bias_ih_l0" + suffix, Shape{4 * H}, l.b_ih.data(), Init::Uniform, H);
    fn(p + ".bias_hh_l0" + suffix, Shape{4 * H}, l.b_hh.data(), Init::Uniform, H);
  };
  auto norm = [&](const std::string& p, auto& w, auto& b, const Shape& shape) {
    fn(p + ".weight", shape, w.data(), Init::One, 0);
    fn(p + ".bias", shape, b.data(), Init::Zero, 0);
  };
  auto linear = [&](const std::string& p, auto& w, auto& b, std::int64_t out, std::int64_t in) {
    fn(p + ".weight", Shape{out, in}, w.data(), Init::Uniform, in);
    fn(p + ".bias", Shape{out}, b.data(), Init::Uniform, in);
  };

  for (std::size_t i = 0; i < self.blocks_.size(); ++i) {
    auto& b = self.blocks_[i];
    const std::string p = "blocks." + std::to_string(i) + ".";
    norm(p + "intra_norm", b.intra_norm_w, b.intra_norm_b, Shape{D});
    lstm(p + "intra_rnn", b.intra_fwd, "", D);
    lstm(p + "intra_rnn", b.intra_bwd, "_reverse", D);
    linear(p + "intra_linear", b.intra_lin_w, b.intra_lin_b, D, 2 * H);
    norm(p + "inter_norm", b.inter_norm_w, b.inter_norm_b, Shape{D});
    lstm(p + "inter_rnn", b.inter, "", D);
    linear(p + "inter_linear", b.inter_lin_w, b.inter_lin_b, D, H);
    auto& a = b.attn;
    linear(p + "attn.q", a.wq, a.bq, L * E, D);
    linear(p + "attn.k", a.wk, a.bk, L * E, D);
    linear(p + "attn.v", a.wv, a.bv, D, D);
    fn(p + "attn.q_prelu", Shape{L}, a.aq.data(), Init::Slope, 0);
    fn(p + "attn.k_prelu", Shape{L}, a.ak.data(), Init::Slope, 0);
    fn(p + "attn.v_prelu", Shape{L}, a.av.data(), Init::Slope, 0);
    norm(p + "attn.q_norm", a.q_norm_w, a.q_norm_b, Shape{L, E, F});
    norm(p + "attn.k_norm", a.k_norm_w, a.k_norm_b, Shape{L, E, F});
    norm(p + "attn.v_norm", a.v_norm_w, a.v_norm_b, Shape{L, Vd, F});
    linear(p + "attn.proj", a.wp, a.bp, D, D);
    fn(p + "attn.proj_prelu", Shape{1}, a.ap.data(), Init::Slope, 0);
    norm(p + "attn.proj_norm", a.p_norm_w, a.p_norm_b, Shape{D, F});
  }

  linear("cond.linear", self.cond_w_, self.cond_b_, D * F, c.cond_dim);
  norm("cond.norm", self.cond_norm_w_, self.cond_norm_b_, Shape{D, F});
  fn("deconv.weight", Shape{D, 2, kKernel, kKernel}, self.deconv_w_.data(), Init::Uniform,
     D * kTaps);
  fn("deconv.bias", Shape{2}, self.deconv_b_.data(), Init::Uniform, D * kTaps);
}

namespace {

std::int64_t numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

}  // namespace

void Model::prepare() {
  for (auto& b : blocks_) {
    for (Lstm* l : {&b.intra_fwd, &b.intra_bwd, &b.inter}) {
      l->bias = l->b_ih + l->b_hh;
      l->w_hh_c = l->w_hh;
    }
    b.intra_ih.resize(b.intra_fwd.w_ih.rows() * 2, b.intra_fwd.w_ih.cols());
    b.intra_ih << b.intra_fwd.w_ih, b.intra_bwd.w_ih;
    b.intra_bias.resize(b.intra_fwd.bias.size() * 2);
    b.intra_bias << b.intra_fwd.bias, b.intra_bwd.bias;
    b.attn.prepare();
  }
  deconv_taps_w_ = deconv_w_.transpose();
}

Model Model::from_seed(const ModelConfig& config, std::uint64_t seed) {
  Model m(config);
  Rng rng(seed);
  visit_parameters(m, [&](const std::string&, const std::vector<std::int64_t>& shape, float* data,
                          Init init, std::int64_t fan_in) {
    const auto n = numel(shape);
    switch (init) {
      case Init::Uniform: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::int64_t i = 0; i < n; ++i) data[i] = static_cast<float>(rng.uniform(-bound, bound));
        break;
      }
      case Init::One: std::fill(data, data + n, 1.0f); break;
      case Init::Zero: std::fill(data, data + n, 0.0f); break;
      case Init::Slope: std::fill(data, data + n, kPreluInit); break;
    }
  });
  m.prepare();
  return m;
}

Model Model::from_archive(const WeightArchive& archive) {
  Model m(archive.config());
  std::vector<std::string> missing;
  std::set<std::string> known;
  visit_parameters(m, [&](const std::string& name, const std::vector<std::int64_t>& shape,
                          float* data, Init, std::int64_t) {
    known.insert(name);
    if (!archive.contains(name)) {
      missing.push_back(name);
      return;
    }
    const Tensor& t = archive.at(name);
    if (t.shape != shape) {
      throw ShapeMismatch("tensor " + name + " has shape " + shape_str(t.shape) + ", expected " +
                          shape_str(shape));
    }
    std::copy(t.data.begin(), t.data.end(), data);
  });
  std::vector<std::string> unknown;
  for (const auto& t : archive.tensors()) {
    if (!known.count(t.name)) unknown.push_back(t.name);
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = "weight archive does not match the model;";
    auto list = [&](const char* label, const std::vector<std::string>& names) {
      if (names.empty()) return;
      msg += std::string(" ") + label + ":";
      for (const auto& n : names) msg += " " + n;
      msg += ";";
    };
    list("missing", missing);
    list("unknown", unknown);
    throw DataError(msg);
  }
  m.prepare();
  return m;
}

WeightArchive Model::to_archive() const {
  WeightArchive a(config_);
  visit_parameters(*this, [&](const std::string& name, const std::vector<std::int64_t>& shape,
                              const float* data, Init, std::int64_t) {
    a.add(Tensor{name, shape, std::vector<float>(data, data + numel(shape))});
  });
  return a;
}

std::int64_t Model::parameter_count() const {
  std::int64_t n = 0;
  visit_parameters(*this, [&](const std::string&, const std::vector<std::int64_t>& shape,
                              const float*, Init, std::int64_t) { n += numel(shape); });
  return n;
}

std::vector<std::pair<std::string, std::vector<std::int64_t>>> Model::parameter_shapes() const {
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> out;
  visit_parameters(*this, [&](const std::string& name, const std::vector<std::int64_t>& shape,
                              const float*, Init, std::int64_t) { out.emplace_back(name, shape); });
  return out;
}

// ---------------------------------------------------------------------------
// Forward pieces shared by the streaming and offline paths. Latents are
// D x (T*F) with the F bins of frame t in columns t*F .. t*F+F-1.

Conditioning Model::condition(const dsp::SpeakerEmbedding& embedding) const {
  if (static_cast<int>(embedding.dim()) != config_.cond_dim) {
    throw SizeMismatch("embedding has dimension " + std::to_string(embedding.dim()) +
                       ", model expects " + std::to_string(config_.cond_dim));
  }
  const auto e = Eigen::Map<const Vec>(embedding.values().data(), config_.cond_dim);
  Vec v = cond_w_ * e + cond_b_;
  const double n = static_cast<double>(v.size());
  const double mean = v.cast<double>().sum() / n;
  const double var = (v.cast<double>().array() - mean).square().sum() / n;
  const float inv = static_cast<float>(1.0 / std::sqrt(var + detail::kNormEps));
  const auto mean_f = static_cast<float>(mean);
  const int D = config_.emb_dim, F = config_.freq_bins();
  const Eigen::Map<const RowMat> vm(v.data(), D, F);
  Conditioning c;
  c.tensor = ((vm.array() - mean_f) * inv * cond_norm_w_.array() + cond_norm_b_.array()).matrix();
  return c;
}

Mat Model::conv_in(const Mat& x_ext, int frames) const {
  const int F = config_.freq_bins();
  const int C = config_.input_channels();
  Mat patches = Mat::Zero(C * kTaps, static_cast<Eigen::Index>(frames) * F);
  for (int t = 0; t < frames; ++t) {
    for (int c = 0; c < C; ++c) {
      for (int kt = 0; kt < kKernel; ++kt) {
        // kt = 0 is the oldest frame (t - 2).
        const Eigen::Index src = static_cast<Eigen::Index>(t + kt) * F;
        for (int kf = 0; kf < kKernel; ++kf) {
          const int row = c * kTaps + kt * kKernel + kf;
          for (int f = 0; f < F; ++f) {
            const int fi = f + kf - 1;
            if (fi >= 0 && fi < F) patches(row, t * F + f) = x_ext(c, src + fi);
          }
        }
      }
    }
  }
  Mat z = conv_in_w_ * patches;
  z.colwise() += conv_in_b_;
  return z;
}

namespace {

// Reorders columns between frame-major (t*F + f) and bin-major (f*T + t).
Mat to_bin_major(const Mat& x, int frames, int F) {
  Mat out(x.rows(), x.cols());
  for (int t = 0; t < frames; ++t) {
    for (int f = 0; f < F; ++f) out.col(static_cast<Eigen::Index>(f) * frames + t) = x.col(t * F + f);
  }
  return out;
}

Mat to_frame_major(const Mat& x, int frames, int F) {
  Mat out(x.rows(), x.cols());
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < frames; ++t) out.col(t * F + f) = x.col(static_cast<Eigen::Index>(f) * frames + t);
  }
  return out;
}

// Intra-frame BiLSTM recurrences. `gin` holds the input projections of both
// directions (rows 0..4H forward, 4H..8H reverse), bin-major; hidden states
// go to rows 0..H (forward) and H..2H (reverse) of `out`. The directions are
// interleaved step by step; they are independent.
void intra_recurrence(const Model::Lstm& fw, const Model::Lstm& bw, const Mat& gin, int frames,
                      int F, Mat& out) {
  const auto H = fw.w_hh_c.cols();
  if (frames == 1) {
    Vec hf = Vec::Zero(H), cf = Vec::Zero(H), hb = Vec::Zero(H), cb = Vec::Zero(H);
    Vec gf(4 * H), gb(4 * H);
    for (int s = 0; s < F; ++s) {
      const int f = s, r = F - 1 - s;
      gf.noalias() = fw.w_hh_c * hf;
      gb.noalias() = bw.w_hh_c * hb;
      gf += gin.col(f).head(4 * H);
      gb += gin.col(r).tail(4 * H);
      detail::lstm_cell(gf, cf, hf);
      detail::lstm_cell(gb, cb, hb);
      out.col(f).head(H) = hf;
      out.col(r).tail(H) = hb;
    }
    return;
  }
  Mat hf = Mat::Zero(H, frames), cf = Mat::Zero(H, frames);
  Mat hb = Mat::Zero(H, frames), cb = Mat::Zero(H, frames);
  Mat gf(4 * H, frames), gb(4 * H, frames);
  for (int s = 0; s < F; ++s) {
    const Eigen::Index f = static_cast<Eigen::Index>(s) * frames;
    const Eigen::Index r = static_cast<Eigen::Index>(F - 1 - s) * frames;
    gf.noalias() = fw.w_hh_c * hf;
    gb.noalias() = bw.w_hh_c * hb;
    gf += gin.block(0, f, 4 * H, frames);
    gb += gin.block(4 * H, r, 4 * H, frames);
    detail::lstm_cell(gf, cf, hf);
    detail::lstm_cell(gb, cb, hb);
    out.block(0, f, H, frames) = hf;
    out.block(H, r, H, frames) = hb;
  }
}

}  // namespace

void Model::block_forward(const Block& blk, Mat& z, int frames, Mat& h, Mat& c,
                          KvCache* kv) const {
  const int F = config_.freq_bins();
  const int H = config_.hidden;
  // The recurrent sublayers run over tiles of frames to keep the gate
  // buffers cache-resident; results do not depend on the tile size.
  constexpr int kTile = 16;
  Mat u, zt;
  for (int t0 = 0; t0 < frames; t0 += kTile) {
    const int n = std::min(kTile, frames - t0);
    zt = z.middleCols(static_cast<Eigen::Index>(t0) * F, static_cast<Eigen::Index>(n) * F);

    // Intra-frame: bidirectional over frequency, independent per frame.
    detail::channel_layer_norm(zt, blk.intra_norm_w, blk.intra_norm_b, u);
    {
      if (n > 1) u = to_bin_major(u, n, F);
      Mat g = blk.intra_ih * u;
      g.colwise() += blk.intra_bias;
      Mat hcat(2 * H, zt.cols());
      intra_recurrence(blk.intra_fwd, blk.intra_bwd, g, n, F, hcat);
      if (n > 1) hcat = to_frame_major(hcat, n, F);
      zt.noalias() += blk.intra_lin_w * hcat;
      zt.colwise() += blk.intra_lin_b;
    }

    // Inter-frame: unidirectional over time, one sequence per bin.
    detail::channel_layer_norm(zt, blk.inter_norm_w, blk.inter_norm_b, u);
    {
      Mat gin = blk.inter.w_ih * u;
      gin.colwise() += blk.inter.bias;
      Mat hout(H, zt.cols()), g;
      for (int t = 0; t < n; ++t) {
        g = gin.middleCols(t * F, F);
        g.noalias() += blk.inter.w_hh_c * h;
        detail::lstm_cell(g, c, h);
        hout.middleCols(t * F, F) = h;
      }
      zt.noalias() += blk.inter_lin_w * hout;
      zt.colwise() += blk.inter_lin_b;
    }
    z.middleCols(static_cast<Eigen::Index>(t0) * F, static_cast<Eigen::Index>(n) * F) = zt;
  }

  z += attention_sublayer(blk.attn, z, frames, kv);
}

void Model::apply_condition(Mat& z, int frames, const Conditioning& cond) const {
  const int F = config_.freq_bins();
  if (cond.tensor.rows() != config_.emb_dim || cond.tensor.cols() != F) {
    throw SizeMismatch("conditioning tensor must be D x F");
  }
  for (int t = 0; t < frames; ++t) z.middleCols(t * F, F).array() *= cond.tensor.array();
}

Mat Model::deconv_taps(const Mat& z) const { return deconv_taps_w_ * z; }

Mat Model::assemble_mask(const Mat& taps_ext, int frames) const {
  // out[t, f] = b + sum_{kt, kf} taps[kt, kf](t - kt, f + 1 - kf); the first
  // two frames of taps_ext are history.
  const int F = config_.freq_bins();
  Mat mask(2, static_cast<Eigen::Index>(frames) * F);
  for (int o = 0; o < 2; ++o) {
    for (int t = 0; t < frames; ++t) {
      for (int f = 0; f < F; ++f) {
        float acc = deconv_b_[o];
        for (int kt = 0; kt < kKernel; ++kt) {
          const Eigen::Index src = static_cast<Eigen::Index>(t + 2 - kt) * F;
          for (int kf = 0; kf < kKernel; ++kf) {
            const int fi = f + 1 - kf;
            if (fi >= 0 && fi < F) acc += taps_ext(o * kTaps + kt * kKernel + kf, src + fi);
          }
        }
        mask(o, t * F + f) = acc;
      }
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Streaming

StreamState Model::make_state() const { return StreamState(config_); }

ChunkTimings Model::process_chunk(StreamState& state, std::span<const float> left,
                                  std::span<const float> right, const Conditioning& cond,
                                  std::span<float> out, StateUpdate mode) const {
  if (!state.initialized()) throw ConfigError("stream state is not initialised");
  if (state.blocks_.size() != blocks_.size()) {
    throw SizeMismatch("stream state was built for a different model");
  }
  const int hop = audio_.hop_len;
  if (static_cast<int>(left.size()) != hop || static_cast<int>(right.size()) != hop ||
      static_cast<int>(out.size()) != hop) {
    throw SizeMismatch("process_chunk expects " + std::to_string(hop) + " samples per channel");
  }

  StreamState* st = &state;
  if (mode == StateUpdate::Copy) {
    if (!state.staging_) {
      state.staging_ = std::make_unique<StreamState>(StreamState(config_));
      state.staging_synced_ = false;
    }
    if (!state.staging_synced_) state.staging_->copy_buffers_from(state);
    st = state.staging_.get();
  } else {
    state.staging_synced_ = false;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int F = config_.freq_bins();
  dsp::SpectralFrame xl(F), xr(F);
  st->stft_left_.push(left, xl);
  st->stft_right_.push(right, xr);

  Mat x_ext(config_.input_channels(), 3 * F);
  x_ext.leftCols(2 * F) = st->input_cache_;
  for (int f = 0; f < F; ++f) {
    x_ext(0, 2 * F + f) = xl[f].real();
    x_ext(1, 2 * F + f) = xl[f].imag();
    x_ext(2, 2 * F + f) = xr[f].real();
    x_ext(3, 2 * F + f) = xr[f].imag();
  }
  st->input_cache_ = x_ext.rightCols(2 * F);

  Mat z = conv_in(x_ext, 1);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    auto& bs = st->blocks_[b];
    block_forward(blocks_[b], z, 1, bs.inter_h, bs.inter_c, &bs.kv);
    if (static_cast<int>(b) == config_.cond_after_block) apply_condition(z, 1, cond);
  }

  Mat taps_ext(2 * kTaps, 3 * F);
  taps_ext.leftCols(2 * F) = st->deconv_cache_;
  taps_ext.rightCols(F) = deconv_taps(z);
  st->deconv_cache_ = taps_ext.rightCols(2 * F);
  const Mat mask = assemble_mask(taps_ext, 1);

  dsp::SpectralFrame est(F);
  for (int f = 0; f < F; ++f) est[f] = dsp::Complex(mask(0, f), mask(1, f)) * xl[f];
  st->istft_.push_frame(est, out);
  const auto t1 = std::chrono::steady_clock::now();

  ChunkTimings timings;
  timings.index = st->chunk_index_;
  timings.inference_ms = elapsed_ms(t0, t1);
  for (float v : out) {
    if (!std::isfinite(v)) {
      throw NumericFault("non-finite output at chunk " + std::to_string(st->chunk_index_),
                         st->chunk_index_);
    }
  }
  ++st->chunk_index_;

  if (mode == StateUpdate::Copy) {
    const auto c0 = std::chrono::steady_clock::now();
    state.copy_buffers_from(*st);
    const auto c1 = std::chrono::steady_clock::now();
    state.staging_synced_ = true;
    timings.copy_ms = elapsed_ms(c0, c1);
  }
  return timings;
}

// ---------------------------------------------------------------------------
// Offline

Mono Model::offline_causal_forward(const BinauralBuffer& input, const Conditioning& cond) const {
  const int F = config_.freq_bins();
  const auto sl = dsp::stft_offline(input.left, audio_);
  const auto sr = dsp::stft_offline(input.right, audio_);
  const int T = static_cast<int>(sl.size());
  if (T == 0) return {};

  Mat x_ext = Mat::Zero(config_.input_channels(), static_cast<Eigen::Index>(T + 2) * F);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      const auto col = static_cast<Eigen::Index>(t + 2) * F + f;
      x_ext(0, col) = sl[t][f].real();
      x_ext(1, col) = sl[t][f].imag();
      x_ext(2, col) = sr[t][f].real();
      x_ext(3, col) = sr[t][f].imag();
    }
  }

  Mat z = conv_in(x_ext, T);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    Mat h = Mat::Zero(config_.hidden, F), c = Mat::Zero(config_.hidden, F);
    block_forward(blocks_[b], z, T, h, c, nullptr);
    if (static_cast<int>(b) == config_.cond_after_block) apply_condition(z, T, cond);
  }

  Mat taps_ext = Mat::Zero(2 * kTaps, static_cast<Eigen::Index>(T + 2) * F);
  taps_ext.rightCols(static_cast<Eigen::Index>(T) * F) = deconv_taps(z);
  const Mat mask = assemble_mask(taps_ext, T);

  std::vector<dsp::SpectralFrame> est(T, dsp::SpectralFrame(F));
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      const auto col = static_cast<Eigen::Index>(t) * F + f;
      est[t][f] = dsp::Complex(mask(0, col), mask(1, col)) * sl[t][f];
    }
  }
  return dsp::istft_offline(est, audio_);
}

// ---------------------------------------------------------------------------

Mono run_stream(const Model& model, const BinauralBuffer& input, const Conditioning& cond,
                bool flush, StateUpdate mode) {
  const auto& a = model.config().audio;
  const std::size_t hop = a.hop_len;
  std::size_t chunks = (input.size() + hop - 1) / hop;
  if (flush) chunks += (a.lookahead_len + hop - 1) / hop;
  StreamState state = model.make_state();
  Mono out(chunks * hop, 0.0f);
  std::vector<float> l(hop), r(hop);
  for (std::size_t k = 0; k < chunks; ++k) {
    for (std::size_t i = 0; i < hop; ++i) {
      const std::size_t n = k * hop + i;
      l[i] = n < input.size() ? input.left[n] : 0.0f;
      r[i] = n < input.size() ? input.right[n] : 0.0f;
    }
    model.process_chunk(state, l, r, cond, std::span<float>(out.data() + k * hop, hop), mode);
  }
  return out;
}

Mono extract_aligned(const Model& model, const BinauralBuffer& input, const Conditioning& cond) {
  const Mono streamed = run_stream(model, input, cond, /*flush=*/true);
  const std::size_t delay = model.config().audio.lookahead_len;
  return Mono(streamed.begin() + delay, streamed.begin() + delay + input.size());
}

}  // namespace tsh::engine
