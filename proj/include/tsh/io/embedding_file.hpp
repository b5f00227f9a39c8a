#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tsh/dsp/embedding.hpp"

namespace tsh::io {

/// Contents of an embedding JSON file: {dim, values, provider, source_hash}.
struct EmbeddingFile {
  dsp::SpeakerEmbedding embedding;
  std::string provider;
  std::string source_hash;  ///< FNV-1a hex of the enrollment samples
};

nlohmann::json to_json(const EmbeddingFile& f);
/// Throws ParseError on a malformed document and DataError when `values`
/// does not match `dim` or is not unit norm.
EmbeddingFile embedding_file_from_json(const nlohmann::json& j);

void save_embedding(const std::filesystem::path& path, const EmbeddingFile& f);
EmbeddingFile load_embedding(const std::filesystem::path& path);

}  // namespace tsh::io
