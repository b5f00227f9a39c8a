#include "tsh/io/embedding_file.hpp"

#include "tsh/common.hpp"
#include "tsh/io/json_file.hpp"

namespace tsh::io {

nlohmann::json to_json(const EmbeddingFile& f) {
  const auto v = f.embedding.values();
  return {{"dim", v.size()},
          {"values", std::vector<float>(v.begin(), v.end())},
          {"provider", f.provider},
          {"source_hash", f.source_hash}};
}

EmbeddingFile embedding_file_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("embedding file must be a JSON object");
  for (const char* key : {"dim", "values", "provider", "source_hash"}) {
    if (!j.contains(key)) throw ParseError(std::string("embedding file lacks '") + key + "'");
  }
  EmbeddingFile f;
  std::vector<float> values;
  try {
    values = j.at("values").get<std::vector<float>>();
    f.provider = j.at("provider").get<std::string>();
    f.source_hash = j.at("source_hash").get<std::string>();
    const auto dim = j.at("dim").get<std::size_t>();
    if (dim != values.size()) {
      throw DataError("embedding dim " + std::to_string(dim) + " but " +
                      std::to_string(values.size()) + " values");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embedding file: ") + e.what());
  }
  try {
    f.embedding = dsp::SpeakerEmbedding::from_unit(std::move(values));
  } catch (const SizeMismatch& e) {
    throw DataError(e.what());
  }
  return f;
}

void save_embedding(const std::filesystem::path& path, const EmbeddingFile& f) {
  write_json_file(path, to_json(f));
}

EmbeddingFile load_embedding(const std::filesystem::path& path) {
  try {
    return embedding_file_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace tsh::io
