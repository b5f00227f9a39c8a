#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsh/scene/scene.hpp"

namespace tsh::eval {

/// Corpora and BRIRs used to render scenes. Owns everything it points to.
struct SceneAssets {
  std::shared_ptr<const scene::BrirLibrary> library;
  std::shared_ptr<const scene::SpeechCorpus> speech;
  std::shared_ptr<const scene::NoiseCorpus> noise;

  scene::Corpora corpora() const { return {speech.get(), noise.get()}; }
};

struct AssetOptions {
  std::optional<std::filesystem::path> brir_manifest;  ///< unset: synthetic pack
  std::optional<std::filesystem::path> speech_dir;     ///< unset: synthetic voices
  std::optional<std::filesystem::path> noise_dir;      ///< unset: synthetic noise
  std::size_t synthetic_speakers = 40;
  std::uint64_t voice_seed = 7;
  double brir_grid_deg = 10.0;
};

SceneAssets load_scene_assets(const AssetOptions& opts = {});

struct DatasetOptions {
  std::size_t count = 100;
  std::uint64_t seed = 1;
  double duration_s = 5.0;
  double moving_fraction = 0.5;  ///< share of scenes with moving sources
  int workers = 0;               ///< 0: hardware concurrency
};

/// Random specs named scene_00000, scene_00001, ...; fully determined by
/// the options.
std::vector<scene::SceneSpec> dataset_specs(const DatasetOptions& opts);

/// Renders mixture and enrollment for `spec` and writes its folder.
void synthesize_scene(const std::filesystem::path& dir, const scene::SceneSpec& spec,
                      const SceneAssets& assets);

/// Writes one folder per spec under `root` (in parallel). Returns the
/// folder paths in spec order.
std::vector<std::filesystem::path> synthesize_dataset(const std::filesystem::path& root,
                                                      const std::vector<scene::SceneSpec>& specs,
                                                      const SceneAssets& assets, int workers = 0);

/// Reads every *.json scene spec in `dir` (sorted by name).
std::vector<scene::SceneSpec> load_scene_specs(const std::filesystem::path& dir);

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0: hardware
/// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace tsh::eval
