#include "tsh/engine/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tsh/io/wav.hpp"

namespace tsh::engine {

static_assert(std::endian::native == std::endian::little, "weight blobs are little-endian");

namespace {
constexpr const char* kFormat = "tsh-weights";
constexpr int kVersion = 1;
}  // namespace

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

void WeightArchive::add(Tensor t) {
  if (index_.count(t.name)) throw DataError("duplicate tensor name: " + t.name);
  if (t.numel() != static_cast<std::int64_t>(t.data.size())) {
    throw ShapeMismatch("tensor " + t.name + ": data size does not match its shape");
  }
  index_[t.name] = tensors_.size();
  tensors_.push_back(std::move(t));
}

const Tensor& WeightArchive::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("no tensor named " + name);
  return tensors_[it->second];
}

std::int64_t WeightArchive::total_parameters() const {
  std::int64_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

bool WeightArchive::operator==(const WeightArchive& o) const {
  if (!(config_ == o.config_) || tensors_.size() != o.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = o.tensors_[i];
    if (a.name != b.name || a.shape != b.shape || a.data.size() != b.data.size()) return false;
    if (std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

void save_weight_archive(const WeightArchive& archive, const std::filesystem::path& manifest) {
  std::filesystem::path blob_path = manifest;
  blob_path.replace_extension(".bin");

  std::vector<std::uint8_t> blob;
  blob.reserve(static_cast<std::size_t>(archive.total_parameters()) * sizeof(float));
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : archive.tensors()) {
    const std::size_t offset = blob.size();
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data.data());
    blob.insert(blob.end(), p, p + t.data.size() * sizeof(float));
    tensors.push_back({{"name", t.name},
                       {"shape", t.shape},
                       {"offset", offset},
                       {"numel", t.data.size()}});
  }

  const nlohmann::json j = {{"format", kFormat},
                            {"version", kVersion},
                            {"dtype", "float32"},
                            {"endianness", "little"},
                            {"config", to_json(archive.config())},
                            {"config_hash", archive.config().hash()},
                            {"blob", blob_path.filename().string()},
                            {"blob_bytes", blob.size()},
                            {"blob_hash", to_hex(fnv1a64(blob.data(), blob.size()))},
                            {"tensors", tensors}};
  io::write_file_bytes(blob_path, blob);
  const std::string text = j.dump(2) + "\n";
  io::write_file_bytes(manifest, std::vector<std::uint8_t>(text.begin(), text.end()));
}

WeightArchive load_weight_archive(const std::filesystem::path& manifest,
                                  const ModelConfig* expected) {
  const auto bytes = io::read_file_bytes(manifest);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("weight manifest " + manifest.string() + ": " + e.what());
  }

  try {
    if (j.at("format").get<std::string>() != kFormat) throw ParseError("not a weight manifest");
    if (j.at("version").get<int>() != kVersion) throw ParseError("unsupported weight version");
    if (j.at("dtype").get<std::string>() != "float32" ||
        j.at("endianness").get<std::string>() != "little") {
      throw ParseError("weight blob must be little-endian float32");
    }
    ModelConfig config;
    try {
      config = model_config_from_json(j.at("config"));
    } catch (const ConfigError& e) {
      throw ParseError(std::string("weight manifest config: ") + e.what());
    }
    const std::string hash = j.at("config_hash").get<std::string>();
    if (hash != config.hash()) {
      throw HashMismatch("config hash " + hash + " does not match manifest config (" +
                         config.hash() + ")");
    }
    if (expected && expected->hash() != hash) {
      throw HashMismatch("weights were built for config " + hash + ", expected " +
                         expected->hash());
    }

    const auto blob_path = manifest.parent_path() / j.at("blob").get<std::string>();
    const auto blob = io::read_file_bytes(blob_path);
    if (blob.size() != j.at("blob_bytes").get<std::size_t>()) {
      throw ParseError("weight blob size does not match manifest");
    }
    if (to_hex(fnv1a64(blob.data(), blob.size())) != j.at("blob_hash").get<std::string>()) {
      throw HashMismatch("weight blob checksum mismatch");
    }

    WeightArchive archive(config);
    for (const auto& jt : j.at("tensors")) {
      Tensor t;
      t.name = jt.at("name").get<std::string>();
      t.shape = jt.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = jt.at("offset").get<std::size_t>();
      const auto n = jt.at("numel").get<std::size_t>();
      if (static_cast<std::int64_t>(n) != t.numel()) {
        throw ShapeMismatch("tensor " + t.name + ": numel does not match shape");
      }
      if (offset % sizeof(float) != 0 || offset + n * sizeof(float) > blob.size()) {
        throw ParseError("tensor " + t.name + " lies outside the blob");
      }
      t.data.resize(n);
      std::memcpy(t.data.data(), blob.data() + offset, n * sizeof(float));
      archive.add(std::move(t));
    }
    return archive;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("weight manifest " + manifest.string() + ": " + e.what());
  }
}

}  // namespace tsh::engine
