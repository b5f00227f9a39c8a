#include "tsh/engine/config.hpp"

namespace tsh::engine {

void ModelConfig::validate() const {
  audio.validate();
  if (unfold_kernel != 1 || unfold_stride != 1) {
    throw ConfigError("streaming requires unfold kernel I == 1 and stride J == 1");
  }
  if (emb_dim <= 0 || hidden <= 0 || heads <= 0 || head_dim <= 0 || num_blocks <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (emb_dim % heads != 0) throw ConfigError("emb_dim must be divisible by heads");
  if (attn_window < 1) throw ConfigError("attention window must be >= 1 frame");
  if (cond_dim <= 0) throw ConfigError("cond_dim must be positive");
  if (cond_after_block < 0 || cond_after_block >= num_blocks) {
    throw ConfigError("cond_after_block out of range");
  }
}

std::string ModelConfig::hash() const { return to_hex(fnv1a64(to_json(*this).dump())); }

nlohmann::json to_json(const ModelConfig& c) {
  // Key order is fixed by nlohmann's sorted object map, so dump() is canonical.
  return {{"emb_dim", c.emb_dim},
          {"num_blocks", c.num_blocks},
          {"hidden", c.hidden},
          {"unfold_kernel", c.unfold_kernel},
          {"unfold_stride", c.unfold_stride},
          {"heads", c.heads},
          {"head_dim", c.head_dim},
          {"attn_window", c.attn_window},
          {"cond_dim", c.cond_dim},
          {"cond_after_block", c.cond_after_block},
          {"sample_rate", c.audio.sample_rate},
          {"chunk_len", c.audio.chunk_len},
          {"lookahead_len", c.audio.lookahead_len},
          {"fft_len", c.audio.fft_len},
          {"win_len", c.audio.win_len},
          {"hop_len", c.audio.hop_len}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.emb_dim = j.at("emb_dim").get<int>();
    c.num_blocks = j.at("num_blocks").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.unfold_kernel = j.at("unfold_kernel").get<int>();
    c.unfold_stride = j.at("unfold_stride").get<int>();
    c.heads = j.at("heads").get<int>();
    c.head_dim = j.at("head_dim").get<int>();
    c.attn_window = j.at("attn_window").get<int>();
    c.cond_dim = j.at("cond_dim").get<int>();
    c.cond_after_block = j.value("cond_after_block", 0);
    c.audio.sample_rate = j.at("sample_rate").get<int>();
    c.audio.chunk_len = j.at("chunk_len").get<int>();
    c.audio.lookahead_len = j.at("lookahead_len").get<int>();
    c.audio.fft_len = j.at("fft_len").get<int>();
    c.audio.win_len = j.at("win_len").get<int>();
    c.audio.hop_len = j.at("hop_len").get<int>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid model config: ") + e.what());
  }
}

}  // namespace tsh::engine
