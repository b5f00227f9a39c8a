#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tsh/engine/config.hpp"

namespace tsh::engine {

struct Tensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;  ///< row-major over `shape`

  std::int64_t numel() const;
};

/// Named float32 tensors plus the configuration they were built for.
class WeightArchive {
 public:
  WeightArchive() = default;
  explicit WeightArchive(ModelConfig config) : config_(std::move(config)) {}

  const ModelConfig& config() const { return config_; }
  void set_config(const ModelConfig& c) { config_ = c; }

  /// Throws DataError on a duplicate name.
  void add(Tensor t);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::int64_t total_parameters() const;

  bool operator==(const WeightArchive& o) const;

 private:
  ModelConfig config_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

/// Writes `<manifest>` (JSON) and its blob (`<stem>.bin` next to it).
void save_weight_archive(const WeightArchive& archive, const std::filesystem::path& manifest);
/// Verifies the manifest's config hash and, when `expected` is given, that it
/// matches that config (HashMismatch otherwise).
WeightArchive load_weight_archive(const std::filesystem::path& manifest,
                                  const ModelConfig* expected = nullptr);

}  // namespace tsh::engine
